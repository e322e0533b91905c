#pragma once

#include <utility>

#include "hprqp/problem.hpp"

namespace hprqp {

/// Diagonal scaling D_row (rows of A) and D_col (columns of A, rows/cols of
/// Q). The scaled data is
///   A~ = D_row A D_col,  Q~ = D_col Q D_col,  c~ = D_col c,
///   K~ = D_row K,  box(phi)~ = D_col^{-1} box(phi),
/// so the scaled variable is x~ = D_col^{-1} x. The objective is invariant
/// under this map; obj_scale records any extra scalar applied to it (1 in the
/// current pipeline).
struct ScalingInfo {
  Vec row;  // m
  Vec col;  // n
  double obj_scale = 1.0;
  bool applied = false;

  static ScalingInfo identity(Index m, Index n);
  ScalingInfo composed_with(const ScalingInfo& later) const;
};

/// Ruiz equilibration on the symmetric stacked block [[Q, A^T], [A, 0]] so
/// that A and Q share the column scaling. Requires an explicit Q and a box
/// composite term; zero rows/columns keep factor 1.
std::pair<CcqpProblem, ScalingInfo> ruiz_equilibrate(const CcqpProblem& prob,
                                                     int iters = 10);

/// Pock-Chambolle diagonal preconditioning computed from A:
/// row factor 1/sqrt(sum_j |A_ij|^{2-alpha}), column factor
/// 1/sqrt(sum_i |A_ij|^alpha); Q and c inherit the column factors.
std::pair<CcqpProblem, ScalingInfo> pock_chambolle(const CcqpProblem& prob,
                                                   double alpha = 1.0);

/// Whether the solve pipeline scales this problem at all.
bool scaling_applicable(const CcqpProblem& prob);

/// Apply an existing scaling to problem data (used by tests and composition).
CcqpProblem apply_scaling(const CcqpProblem& prob, const ScalingInfo& info);

/// Map a scaled iterate back to original coordinates:
///   x = D_col x~,  y = D_row y~,  z = D_col^{-1} z~,  w = D_col w~,
///   (Qw) = D_col^{-1} (Q~ w~).
struct UnscaledIterate {
  Vec x, y, z, w, qw;
};
UnscaledIterate unscale_solution(const ScalingInfo& info, const Vec& x,
                                 const Vec& y, const Vec& z, const Vec& w,
                                 const Vec& qw);

}  // namespace hprqp
