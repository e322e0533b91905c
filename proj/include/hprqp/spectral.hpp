#pragma once

#include <cstdint>
#include <functional>

#include "hprqp/problem.hpp"

namespace hprqp {

/// Safe upper estimates of the largest eigenvalues of A A^T and Q, used to
/// build the proximal operators of the y- and w-blocks.
struct SpectralEstimates {
  double lambda_A = 0.0;
  double lambda_Q = 0.0;
  int iterations_A = 0;
  int iterations_Q = 0;
};

/// Power iteration for a self-adjoint PSD operator of dimension d. Stops when
/// successive Rayleigh quotients agree to the relative tolerance; returns 0
/// for the (near-)zero operator.
double power_method(const std::function<void(const Vec&, Vec&)>& op, Index d,
                    double tol = 1e-4, int max_iter = 5000,
                    std::uint64_t seed = 0, int* iters_out = nullptr);

/// lambda_A >= lambda1(AA^T), lambda_Q >= lambda1(Q), each inflated by the
/// multiplicative safety factor to stay above the true value despite the
/// power-method tolerance.
SpectralEstimates estimate(const CcqpProblem& prob, double safety = 1.002,
                           std::uint64_t seed = 0);

}  // namespace hprqp
