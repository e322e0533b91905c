#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "hprqp/problem.hpp"
#include "hprqp/scaling.hpp"
#include "hprqp/spectral.hpp"

namespace hprqp {

struct SolverConfig {
  double tol = 1e-8;
  double time_limit = 3600.0;          // seconds
  std::int64_t max_iter = 1'000'000'000;
  // restart constants; alpha3 tightens once the merit ratio drops below
  // tighten_ratio at a restart.
  double alpha1 = 0.2;
  double alpha2 = 0.8;
  double alpha3 = 0.5;
  double alpha3_tight = 0.2;
  double tighten_ratio = 0.1;
  double sigma0 = 0.0;                 // <= 0 selects the ||b||/||c|| rule
  int check_interval = 100;            // termination cadence (plus restarts)
  double sigma_bracket_lo = 1e-9;
  double sigma_bracket_hi = 1e9;
  double golden_rel_tol = 1e-6;
  bool scaling = true;
  bool restarts = true;
  bool sigma_updates = true;
  std::uint64_t seed = 0;
  int cache_check_interval = 0;        // >0: verify incremental products
  bool keep_merit_history = false;     // record ||u^k - ubar^{k+1}||_M per step

  void validate() const;
};

/// The quadruple u_Q = (y, w_Q, z, x) plus the operator products the loop
/// keeps current. z stays empty until materialized at a reporting point.
struct IterateBundle {
  Vec y;     // m
  Vec w_Q;   // n, shadow of w in Range(Q)
  Vec z;     // n (materialized lazily)
  Vec x;     // n
  Vec Qw_Q;  // cache of Q w_Q
  Vec Aty;   // cache of A^T y
};

struct KktReport {
  double eta_gap = kInf;
  double eta_p = kInf;
  double eta_d = kInf;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  std::array<double, 4> kkt_block_norms{0.0, 0.0, 0.0, 0.0};
  Status status = Status::IterLimit;
  std::int64_t iterations = 0;
  int restarts = 0;
  double solve_seconds = 0.0;
  double data_seconds = 0.0;  // load + preconditioning, kept out of solve time
  double sigma_final = 0.0;
  double lambda_A = 0.0;
  double lambda_Q = 0.0;

  bool within(double tol) const {
    return eta_gap <= tol && eta_p <= tol && eta_d <= tol;
  }
};

struct TraceRecord {
  std::int64_t k = 0;
  int r = 0;
  std::int64_t t = 0;
  double sigma = 0.0;
  double r_tilde = 0.0;
  double eta_gap = kInf;
  double eta_p = kInf;
  double eta_d = kInf;
  double seconds = 0.0;
};

struct RestartState {
  int r = 0;                      // outer counter
  std::int64_t t = 0;             // inner steps completed this epoch
  std::int64_t k = 0;             // total steps completed
  double sigma = 1.0;             // sigma_r
  double r_tilde_first = 0.0;     // merit of the epoch's first step
  double r_tilde_prev = 0.0;      // most recent merit
  double r_tilde_baseline = 0.0;  // final merit of epoch 0
  bool baseline_set = false;
  bool tightened = false;         // alpha3 latch
};

enum class RestartDecision { Continue, Restart };

/// Restart criteria on the merit just computed: sufficient decay, local
/// increase despite overall decay, or an inner loop that has consumed at
/// least an alpha3 fraction of all iterations.
RestartDecision check_restart(const RestartState& rs, double r_tilde_new,
                              const SolverConfig& cfg);

/// ||d||_M^2 for d = (dy, dw, dz, dx) without assembling M; the z block
/// contributes nothing and dw enters only through Q dw, so shadow iterates
/// are handled transparently. Applies A^T and Q internally.
double m_norm_sq(const Vec& dy, const Vec& dw, const Vec& dx, const SpMat& A,
                 const PsdOperator& Q, double lambda_A, double lambda_Q,
                 double sigma);

/// Same quadratic form evaluated from precomputed products; used by the hot
/// loop where every product is already available.
double m_norm_sq_terms(double sigma, double lambda_A, double lambda_Q,
                       double dy_sq, const Vec& at_dy, const Vec& dw,
                       const Vec& q_dw, double atdy_q_atdy, const Vec& dx);

/// theta1*sigma + theta2/sigma + sigma^2*theta3/(1 + lambda_Q*sigma).
double sigma_objective(double sigma, double theta1, double theta2,
                       double theta3, double lambda_q);

/// Golden-section minimization over log(sigma) in [lo, hi]; returns the best
/// of the interior estimate and both endpoints.
double golden_section_log_sigma(const std::function<double(double)>& f,
                                double lo, double hi, double rel_tol);

/// Penalty update at a restart: coefficients from the epoch displacement,
/// golden-section solve, then exponential smoothing in log space with
/// beta = exp(-r_tilde_prev / r_tilde_baseline). Nonfinite coefficients leave
/// sigma unchanged.
double sigma_update(const IterateBundle& u_bar, const IterateBundle& u_anchor,
                    const CcqpProblem& prob, const SpectralEstimates& est,
                    const RestartState& rs, const SolverConfig& cfg);

/// Relative KKT measures and objectives of an iterate in the coordinates of
/// `prob` (callers unscale first). Uses x in both quadratic terms of the gap;
/// an infinite conjugate makes eta_gap infinite. If u.Qw_Q is absent the
/// w-block residual is evaluated with w = x.
KktReport kkt_residuals(const IterateBundle& u, const CcqpProblem& prob);

/// One HPR iteration on a fixed problem: prox step in x, shadow half update
/// of w, projection step in y, shadow full update of w, reflection and
/// Halpern averaging against the current anchor. Exposed so tests can drive
/// single steps; solve() runs it in a loop.
class HprKernel {
 public:
  HprKernel(const CcqpProblem& prob, double lambda_A, double lambda_Q);

  /// Performs one step with penalty sigma and global Halpern index k.
  /// Returns ||u - ubar||_M^2. Throws NumericalBreakdown on nonfinite blocks.
  double step(double sigma, std::int64_t k);

  void set_state(const Vec& y, const Vec& w, const Vec& x);
  void set_anchor_to_current();
  void restart_to_bar();

  IterateBundle current() const;
  IterateBundle bar() const;  // includes materialized zbar
  IterateBundle anchor() const;
  Vec materialize_zbar() const;

  bool has_q() const { return has_q_; }
  double lambda_A() const { return lambda_a_; }
  double lambda_Q() const { return lambda_q_; }
  double last_sigma() const { return last_sigma_; }

  /// Recomputes both caches and returns the worst relative deviation.
  double verify_caches();

 private:
  const CcqpProblem& prob_;
  double lambda_a_, lambda_q_;
  bool has_q_;
  double last_sigma_ = 0.0;

  Vec y_, w_, x_, qw_, aty_;
  Vec y0_, w0_, x0_, qw0_, aty0_;
  Vec ybar_, wbar_, xbar_, qwbar_, atybar_;
  Vec r_z_, q_vec_, xhat_, wbar_half_, qwbar_half_, t_vec_, r_y_, proj_, da_, qda_;

  void check_finite(double merit_sq) const;
};

struct SolveResult {
  IterateBundle u;  // bar iterate in original coordinates, z materialized
  KktReport report;
  std::vector<TraceRecord> trace;
  std::vector<double> merit_history;  // filled when cfg.keep_merit_history
};

/// Full pipeline: optional preconditioning, spectral estimates, the sigma0
/// rule, the restarted HPR loop with penalty updates, and termination on
/// original-space residuals.
SolveResult solve(const CcqpProblem& prob, const SolverConfig& cfg);

}  // namespace hprqp
