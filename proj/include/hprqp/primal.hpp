#pragma once

#include "hprqp/engine.hpp"

namespace hprqp {

/// Which splitting the solver runs. Dual is the main method; P1 and P2 are
/// the primal reformulations kept as baselines (single slack block, and
/// slack plus decoupling block).
enum class Variant { Dual, P1, P2 };

Variant variant_from_string(const std::string& s);
std::string to_string(Variant v);

/// Runs the P1 or P2 primal splitting with the same restart and penalty
/// machinery as the dual method, restricted to box composite terms.
SolveResult solve_primal_variant(const CcqpProblem& prob,
                                 const SolverConfig& cfg, Variant variant);

/// Dispatch helper used by the CLI and the benchmark driver.
SolveResult solve_variant(const CcqpProblem& prob, const SolverConfig& cfg,
                          Variant variant);

}  // namespace hprqp
