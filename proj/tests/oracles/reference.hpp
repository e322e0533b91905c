#pragma once

// Independent transcriptions and dense assemblies used as test oracles. These
// deliberately recompute everything from the written update formulas with no
// caching and no algebraic shortcuts.

#include <cstdint>

#include "hprqp/problem.hpp"

namespace hprqp::test {

/// Dense preconditioner M over the stacked (y, w, z, x) coordinates, with the
/// sGS block assembled through an eigendecomposition pseudoinverse.
Mat dense_m_matrix(const Mat& A, const Mat& Q, double sigma, double lambda_a,
                   double lambda_q);

/// Moore-Penrose pseudoinverse via symmetric eigendecomposition.
Mat sym_pinv(const Mat& S, double rel_tol = 1e-12);

/// Orthogonal projector onto Range(Q).
Mat range_projector(const Mat& Q, double rel_tol = 1e-12);

struct RefIterate {
  Vec y, w, z, x;
};

/// Literal shadow-sequence iteration (no product caching, w kept in the full
/// space). One step from `u` with Halpern index k; also returns the bar point.
class RefShadow {
 public:
  RefShadow(const CcqpProblem& prob, double lambda_a, double lambda_q,
            double sigma);
  void set_start(const RefIterate& u0);
  RefIterate step(std::int64_t k);  // returns the bar iterate
  const RefIterate& current() const { return u_; }

 private:
  const CcqpProblem& prob_;
  double la_, lq_, sigma_;
  RefIterate u_, anchor_;
};

/// Literal iteration with w restricted to Range(Q) through an explicit
/// projector (dense Q only).
class RefProjected {
 public:
  RefProjected(const CcqpProblem& prob, double lambda_a, double lambda_q,
               double sigma);
  void set_start(const RefIterate& u0);
  RefIterate step(std::int64_t k);
  const RefIterate& current() const { return u_; }

 private:
  const CcqpProblem& prob_;
  Mat proj_;
  double la_, lq_, sigma_;
  RefIterate u_, anchor_;
};

/// Joint argmin over (y, w) of the augmented Lagrangian plus the sGS proximal
/// term, solved by eliminating w and enumerating the sign pattern of y.
/// Requires Q positive definite and finite K bounds.
struct JointYW {
  Vec y, w;
};
JointYW joint_yw_argmin(const Mat& A, const Mat& Q, const Vec& c,
                        const Vec& k_lo, const Vec& k_hi, double sigma,
                        double lambda_a, double lambda_q, const Vec& y_k,
                        const Vec& w_k, const Vec& zbar, const Vec& xbar);

/// Cyclic coordinate descent for 1/2 ||Ax-b||^2 + lambda ||x||_1.
Vec lasso_cd(const SpMat& A, const Vec& b, double lambda, int max_sweeps = 100000,
             double tol = 1e-13);

double lasso_objective(const SpMat& A, const Vec& b, double lambda,
                       const Vec& x);

/// Brute-force assignment minimum of sum_i alpha_i beta_{pi(i)} (d <= 9).
double min_assignment_bruteforce(const Vec& alpha, const Vec& beta);

/// Dense Kronecker assembly B kron A - I kron S - T kron I.
Mat kron_qhat_dense(const Mat& A_hat, const Mat& B_hat, const Mat& S,
                    const Mat& T);

}  // namespace hprqp::test
