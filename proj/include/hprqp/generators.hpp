#pragma once

#include <cstdint>

#include "hprqp/problem.hpp"

namespace hprqp {

/// Random convex QP in the style of the sparse synthetic family: A with a
/// fixed number of entries per row (density * n, at least one), Q = M^T M
/// plus a small diagonal, a mix of equality and two-sided rows, and mostly
/// finite variable bounds. Deterministic under the seed.
CcqpProblem gen_random_qp(Index n, Index m, double density, std::uint64_t seed);

struct LassoInstance {
  SpMat A_hat;  // p x q
  Vec b_hat;    // p
  double lambda = 0.0;
};

enum class LassoLambdaRule { Thousandth, Fifth };  // 1e-3 or 1/5 of ||A^T b||_inf

LassoInstance gen_lasso(Index p, Index q, double density, std::uint64_t seed,
                        LassoLambdaRule rule = LassoLambdaRule::Thousandth);

/// 1/2 ||A x - b||^2 + lambda ||x||_1 as a CQP over (x, s, t):
/// 1/2 ||s||^2 + lambda sum t, with s = A x - b as equality rows and
/// -t <= x <= t as inequality rows.
CcqpProblem lasso_to_cqp(const LassoInstance& inst);

/// The same objective in native composite form: matrix-free Q = A^T A,
/// c = -A^T b, phi = lambda ||.||_1, no row constraints. The reported
/// objective includes the 1/2 ||b||^2 constant so both formulations agree.
CcqpProblem lasso_native(const LassoInstance& inst);

struct QapInstance {
  Index d = 0;
  Mat A_hat, B_hat;       // symmetric d x d
  Mat V_A, V_B;           // eigenvectors
  Vec alpha;              // eigenvalues of A_hat, descending
  Vec beta;               // eigenvalues of B_hat, ascending
  Vec s_bar, t_bar;       // assignment-LP duals
  Mat S, T;

  /// vec(A X B - S X - X T) for column-stacked vec(X).
  Vec apply_qhat(const Vec& v) const;
};

/// Distance-matrix / random-symmetric construction of the QAP relaxation:
/// row/column-sum equality constraints on vec(X) >= 0 with the matrix-free
/// quadratic operator above.
struct QapGenerated {
  QapInstance inst;
  CcqpProblem problem;
};
QapGenerated gen_qap(Index d, std::uint64_t seed);

}  // namespace hprqp
