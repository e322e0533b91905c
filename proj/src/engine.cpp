#include "hprqp/engine.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

namespace hprqp {

namespace {

double inf_norm(const Vec& v) {
  return v.size() > 0 ? v.lpNorm<Eigen::Infinity>() : 0.0;
}

double elapsed_seconds(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from)
      .count();
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw Error("config: tol must be positive");
  if (!(time_limit > 0.0)) throw Error("config: time_limit must be positive");
  if (!(0.0 < alpha1 && alpha1 < alpha2 && alpha2 < 1.0))
    throw Error("config: need 0 < alpha1 < alpha2 < 1");
  if (!(0.0 < alpha3 && alpha3 < 1.0))
    throw Error("config: need 0 < alpha3 < 1");
  if (check_interval < 1) throw Error("config: check_interval must be >= 1");
  if (!(sigma_bracket_lo > 0.0 && sigma_bracket_lo < sigma_bracket_hi))
    throw Error("config: bad sigma bracket");
}

RestartDecision check_restart(const RestartState& rs, double r_tilde_new,
                              const SolverConfig& cfg) {
  if (rs.t < 1) return RestartDecision::Continue;
  if (r_tilde_new <= cfg.alpha1 * rs.r_tilde_first)
    return RestartDecision::Restart;  // sufficient decay
  if (r_tilde_new <= cfg.alpha2 * rs.r_tilde_first &&
      r_tilde_new > rs.r_tilde_prev)
    return RestartDecision::Restart;  // local increase despite overall decay
  const double a3 = rs.tightened ? cfg.alpha3_tight : cfg.alpha3;
  if (static_cast<double>(rs.t) >= a3 * static_cast<double>(rs.k))
    return RestartDecision::Restart;  // excessively long inner loop
  return RestartDecision::Continue;
}

double m_norm_sq_terms(double sigma, double lambda_a, double lambda_q,
                       double dy_sq, const Vec& at_dy, const Vec& dw,
                       const Vec& q_dw, double atdy_q_atdy, const Vec& dx) {
  const double t1 = sigma * (at_dy - q_dw).squaredNorm();
  const double t2 = sigma * lambda_a * dy_sq;
  const double t3 = -sigma * at_dy.squaredNorm();
  const double t4 = sigma * lambda_q * dw.dot(q_dw);
  const double t5 = -sigma * q_dw.squaredNorm();
  const double t6 = sigma * sigma / (1.0 + sigma * lambda_q) * atdy_q_atdy;
  const double t7 = 2.0 * (at_dy - q_dw).dot(dx);
  const double t8 = dx.squaredNorm() / sigma;
  const double v = t1 + t2 + t3 + t4 + t5 + t6 + t7 + t8;
  const double scale = std::abs(t1) + std::abs(t2) + std::abs(t3) +
                       std::abs(t4) + std::abs(t5) + std::abs(t6) +
                       std::abs(t7) + std::abs(t8);
  if (v < -1e-9 * std::max(scale, 1.0))
    throw Error("M-seminorm evaluated negative; preconditioner not PSD");
  return std::max(v, 0.0);
}

double m_norm_sq(const Vec& dy, const Vec& dw, const Vec& dx, const SpMat& A,
                 const PsdOperator& Q, double lambda_a, double lambda_q,
                 double sigma) {
  if (!(sigma > 0.0)) throw Error("m_norm_sq requires sigma > 0");
  Vec at_dy;
  if (dy.size() > 0)
    at_dy = A.transpose() * dy;
  else
    at_dy = Vec::Zero(dx.size());
  Vec q_dw = Q.apply(dw);
  double atdy_q = 0.0;
  if (lambda_q > 0.0) atdy_q = at_dy.dot(Q.apply(at_dy));
  return m_norm_sq_terms(sigma, lambda_a, lambda_q, dy.squaredNorm(), at_dy,
                         dw, q_dw, atdy_q, dx);
}

double sigma_objective(double sigma, double theta1, double theta2,
                       double theta3, double lambda_q) {
  return theta1 * sigma + theta2 / sigma +
         sigma * sigma * theta3 / (1.0 + lambda_q * sigma);
}

double golden_section_log_sigma(const std::function<double(double)>& f,
                                double lo, double hi, double rel_tol) {
  constexpr double kInvPhi = 0.6180339887498948482;
  double a = std::log(lo), b = std::log(hi);
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(std::exp(c)), fd = f(std::exp(d));
  while (b - a > rel_tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(std::exp(d));
    }
  }
  double best = 0.5 * (a + b);
  double fbest = f(std::exp(best));
  // The minimizer may sit on the bracket edge.
  if (f(lo) < fbest) {
    best = std::log(lo);
    fbest = f(lo);
  }
  if (f(hi) < fbest) best = std::log(hi);
  return std::exp(best);
}

double sigma_update(const IterateBundle& u_bar, const IterateBundle& u_anchor,
                    const CcqpProblem& prob, const SpectralEstimates& est,
                    const RestartState& rs, const SolverConfig& cfg) {
  const Vec dwq = u_bar.w_Q - u_anchor.w_Q;
  Vec q_dw;
  if (u_bar.Qw_Q.size() == prob.n && u_anchor.Qw_Q.size() == prob.n)
    q_dw = u_bar.Qw_Q - u_anchor.Qw_Q;
  else
    q_dw = prob.Q.apply(dwq);
  Vec at_dy;
  if (u_bar.Aty.size() == prob.n && u_anchor.Aty.size() == prob.n)
    at_dy = u_bar.Aty - u_anchor.Aty;
  else if (prob.m > 0)
    at_dy = prob.A.transpose() * (u_bar.y - u_anchor.y);
  else
    at_dy = Vec::Zero(prob.n);

  double theta1 = est.lambda_A * (u_bar.y - u_anchor.y).squaredNorm() +
                  est.lambda_Q * dwq.dot(q_dw) - 2.0 * q_dw.dot(at_dy);
  double theta2 = (u_bar.x - u_anchor.x).squaredNorm();
  double theta3 = est.lambda_Q > 0.0 ? at_dy.dot(prob.Q.apply(at_dy)) : 0.0;

  if (!std::isfinite(theta1) || !std::isfinite(theta2) ||
      !std::isfinite(theta3)) {
    std::cerr << "hprqp: sigma update skipped (nonfinite coefficients)\n";
    return rs.sigma;
  }
  theta1 = std::max(theta1, 1e-12);
  theta2 = std::max(theta2, 1e-12);
  theta3 = std::max(theta3, 0.0);

  const double lambda_q = est.lambda_Q;
  const double sigma_new = golden_section_log_sigma(
      [&](double s) { return sigma_objective(s, theta1, theta2, theta3, lambda_q); },
      cfg.sigma_bracket_lo, cfg.sigma_bracket_hi, cfg.golden_rel_tol);

  const double beta =
      std::exp(-rs.r_tilde_prev / std::max(rs.r_tilde_baseline, 1e-300));
  return std::exp(beta * std::log(sigma_new) +
                  (1.0 - beta) * std::log(rs.sigma));
}

KktReport kkt_residuals(const IterateBundle& u, const CcqpProblem& prob) {
  if (u.x.size() != prob.n || u.y.size() != prob.m || u.z.size() != prob.n)
    throw DimensionError("kkt_residuals: iterate does not match problem");
  KktReport rep;
  const Vec qx = prob.Q.apply(u.x);
  Vec ax, aty;
  if (prob.m > 0) {
    ax.noalias() = prob.A * u.x;
    aty.noalias() = prob.A.transpose() * u.y;
  } else {
    ax = Vec(0);
    aty = Vec::Zero(prob.n);
  }

  const double quad = 0.5 * u.x.dot(qx);
  const double pobj = quad + prob.c.dot(u.x) + prob.phi.value(u.x);
  const double dneg = quad + support_box(prob.K, -u.y) + prob.phi.conjugate(-u.z);
  if (std::isfinite(pobj) && std::isfinite(dneg)) {
    rep.eta_gap = std::abs(pobj + dneg - 2.0 * quad) /
                  (1.0 + std::max(std::abs(pobj), std::abs(dneg)));
  } else {
    rep.eta_gap = kInf;
  }
  // pobj + dneg - 2 quad == pobj - (-dneg): primal objective minus dual.

  const double b_inf = inf_norm(prob.K.finite_bound_magnitudes());
  if (prob.m > 0) {
    rep.eta_p = inf_norm(ax - prob.K.project(ax)) /
                (1.0 + std::max(b_inf, inf_norm(ax)));
  } else {
    rep.eta_p = 0.0;
  }
  rep.eta_d = inf_norm(-qx + aty + u.z - prob.c) /
              (1.0 + std::max({inf_norm(prob.c), inf_norm(aty), inf_norm(qx)}));

  const Vec& qw = u.Qw_Q.size() == prob.n ? u.Qw_Q : qx;
  if (prob.m > 0)
    rep.kkt_block_norms[0] = (ax - prob.K.project(ax - u.y)).norm();
  rep.kkt_block_norms[1] = (qw - qx).norm();
  rep.kkt_block_norms[2] = (u.x - prox_phi(prob.phi, 1.0, u.x - u.z)).norm();
  rep.kkt_block_norms[3] = (prob.c - aty + qw - u.z).norm();

  rep.primal_obj = pobj + prob.obj_const;
  rep.dual_obj = -dneg + prob.obj_const;
  return rep;
}

HprKernel::HprKernel(const CcqpProblem& prob, double lambda_a, double lambda_q)
    : prob_(prob), lambda_a_(lambda_a), lambda_q_(lambda_q) {
  has_q_ = lambda_q_ > 0.0 && !prob.Q.is_zero();
  const Index n = prob.n, m = prob.m;
  y_ = Vec::Zero(m);
  w_ = Vec::Zero(n);
  x_ = Vec::Zero(n);
  qw_ = Vec::Zero(n);
  aty_ = Vec::Zero(n);
  y0_ = y_;
  w0_ = w_;
  x0_ = x_;
  qw0_ = qw_;
  aty0_ = aty_;
  ybar_ = Vec::Zero(m);
  wbar_ = Vec::Zero(n);
  xbar_ = Vec::Zero(n);
  qwbar_ = Vec::Zero(n);
  atybar_ = Vec::Zero(n);
  r_z_ = Vec::Zero(n);
  q_vec_ = Vec::Zero(n);
  xhat_ = Vec::Zero(n);
  wbar_half_ = Vec::Zero(n);
  qwbar_half_ = Vec::Zero(n);
  t_vec_ = Vec::Zero(n);
  r_y_ = Vec::Zero(m);
  proj_ = Vec::Zero(m);
  da_ = Vec::Zero(n);
  qda_ = Vec::Zero(n);
}

void HprKernel::set_state(const Vec& y, const Vec& w, const Vec& x) {
  if (y.size() != prob_.m || w.size() != prob_.n || x.size() != prob_.n)
    throw DimensionError("set_state: wrong lengths");
  y_ = y;
  w_ = w;
  x_ = x;
  qw_ = has_q_ ? prob_.Q.apply(w_) : Vec::Zero(prob_.n);
  aty_ = prob_.m > 0 ? Vec(prob_.A.transpose() * y_) : Vec::Zero(prob_.n);
  set_anchor_to_current();
}

void HprKernel::set_anchor_to_current() {
  y0_ = y_;
  w0_ = w_;
  x0_ = x_;
  qw0_ = qw_;
  aty0_ = aty_;
}

void HprKernel::restart_to_bar() {
  y_ = ybar_;
  w_ = wbar_;
  x_ = xbar_;
  qw_ = qwbar_;
  aty_ = atybar_;
  set_anchor_to_current();
}

Vec HprKernel::materialize_zbar() const {
  if (!(last_sigma_ > 0.0)) return Vec::Zero(prob_.n);
  return (xbar_ - r_z_) / last_sigma_;
}

IterateBundle HprKernel::current() const {
  IterateBundle u;
  u.y = y_;
  u.w_Q = w_;
  u.x = x_;
  u.Qw_Q = qw_;
  u.Aty = aty_;
  return u;
}

IterateBundle HprKernel::anchor() const {
  IterateBundle u;
  u.y = y0_;
  u.w_Q = w0_;
  u.x = x0_;
  u.Qw_Q = qw0_;
  u.Aty = aty0_;
  return u;
}

IterateBundle HprKernel::bar() const {
  IterateBundle u;
  u.y = ybar_;
  u.w_Q = wbar_;
  u.x = xbar_;
  u.z = materialize_zbar();
  u.Qw_Q = qwbar_;
  u.Aty = atybar_;
  return u;
}

double HprKernel::verify_caches() {
  double worst = 0.0;
  if (has_q_) {
    const Vec fresh = prob_.Q.apply(w_);
    worst = std::max(worst, (qw_ - fresh).norm() / (1.0 + fresh.norm()));
  }
  if (prob_.m > 0) {
    const Vec fresh = prob_.A.transpose() * y_;
    worst = std::max(worst, (aty_ - fresh).norm() / (1.0 + fresh.norm()));
  }
  return worst;
}

void HprKernel::check_finite(double merit_sq) const {
  if (std::isfinite(merit_sq)) return;
  auto bad = [](const Vec& v) { return !v.allFinite(); };
  if (bad(xbar_)) throw NumericalBreakdown("x");
  if (bad(ybar_)) throw NumericalBreakdown("y");
  if (bad(wbar_)) throw NumericalBreakdown("w_Q");
  if (bad(qwbar_)) throw NumericalBreakdown("Qw_Q");
  if (bad(atybar_)) throw NumericalBreakdown("Aty");
  throw NumericalBreakdown("merit");
}

double HprKernel::step(double sigma, std::int64_t k) {
  if (!(sigma > 0.0)) throw Error("step requires sigma > 0");
  const double sl = sigma * lambda_q_;

  // r_z = x + sigma (-Q w + A^T y - c); xbar = Prox_{sigma phi}(r_z)
  q_vec_ = aty_ - qw_ - prob_.c;
  r_z_ = x_ + sigma * q_vec_;
  prox_phi(prob_.phi, sigma, r_z_, xbar_);
  xhat_ = 2.0 * xbar_ - x_;

  if (has_q_) {
    wbar_half_ = (sl * w_ + xhat_) / (1.0 + sl);
    prob_.Q.apply(wbar_half_, qwbar_half_);
  }

  if (prob_.m > 0) {
    if (has_q_)
      t_vec_ = xhat_ + sigma * (qw_ - qwbar_half_);
    else
      t_vec_ = xhat_;
    r_y_.noalias() = prob_.A * t_vec_;
    r_y_ -= (sigma * lambda_a_) * y_;
    prob_.K.project(r_y_, proj_);
    ybar_ = (proj_ - r_y_) / (sigma * lambda_a_);
    atybar_.noalias() = prob_.A.transpose() * ybar_;
  } else {
    atybar_.setZero();
  }

  double atdy_q_atdy = 0.0;
  if (has_q_) {
    da_ = atybar_ - aty_;
    const double f = sigma / (1.0 + sl);
    wbar_ = wbar_half_ + f * da_;
    prob_.Q.apply(da_, qda_);
    qwbar_ = qwbar_half_ + f * qda_;
    atdy_q_atdy = da_.dot(qda_);  // <A^T dy, Q A^T dy> with dy = y - ybar
  } else {
    wbar_ = w_;
    qwbar_ = qw_;
  }

  const double merit_sq = m_norm_sq_terms(
      sigma, lambda_a_, lambda_q_, (y_ - ybar_).squaredNorm(), aty_ - atybar_,
      w_ - wbar_, qw_ - qwbar_, atdy_q_atdy, x_ - xbar_);
  check_finite(merit_sq);

  // Reflection and Halpern averaging against the anchor.
  const double b1 = 1.0 / static_cast<double>(k + 2);
  const double b2 = static_cast<double>(k + 1) / static_cast<double>(k + 2);
  y_ = b1 * y0_ + b2 * (2.0 * ybar_ - y_);
  w_ = b1 * w0_ + b2 * (2.0 * wbar_ - w_);
  x_ = b1 * x0_ + b2 * xhat_;
  qw_ = b1 * qw0_ + b2 * (2.0 * qwbar_ - qw_);
  aty_ = b1 * aty0_ + b2 * (2.0 * atybar_ - aty_);

  last_sigma_ = sigma;
  return merit_sq;
}

namespace {

double initial_sigma(const CcqpProblem& prob, const SolverConfig& cfg) {
  if (cfg.sigma0 > 0.0) return cfg.sigma0;
  const double nb = prob.K.finite_bound_magnitudes().norm();
  const double nc = prob.c.norm();
  const bool ok = nb >= 1e-16 && nb <= 1e16 && nc >= 1e-16 && nc <= 1e16;
  return ok ? nb / nc : 1.0;
}

}  // namespace

SolveResult solve(const CcqpProblem& prob_in, const SolverConfig& cfg) {
  cfg.validate();
  prob_in.validate();
  const auto t_data = std::chrono::steady_clock::now();

  const bool scaled = cfg.scaling && scaling_applicable(prob_in);
  CcqpProblem prob;
  ScalingInfo info = ScalingInfo::identity(prob_in.m, prob_in.n);
  if (scaled) {
    auto [p1, s1] = ruiz_equilibrate(prob_in, 10);
    auto [p2, s2] = pock_chambolle(p1, 1.0);
    prob = std::move(p2);
    info = s1.composed_with(s2);
  } else {
    prob = prob_in;
  }

  SolveResult res;
  res.report.data_seconds = elapsed_seconds(t_data);
  const auto t_solve = std::chrono::steady_clock::now();

  const SpectralEstimates est = estimate(prob, 1.002, cfg.seed);
  res.report.lambda_A = est.lambda_A;
  res.report.lambda_Q = est.lambda_Q;

  HprKernel kern(prob, est.lambda_A, est.lambda_Q);

  RestartState rs;
  rs.sigma = initial_sigma(prob, cfg);

  auto unscaled_bundle = [&](const IterateBundle& u) {
    if (!info.applied) return u;
    IterateBundle o;
    const UnscaledIterate ui =
        unscale_solution(info, u.x, u.y, u.z, u.w_Q, u.Qw_Q);
    o.x = ui.x;
    o.y = ui.y;
    o.z = ui.z;
    o.w_Q = ui.w;
    o.Qw_Q = ui.qw;
    return o;
  };

  auto record = [&](const IterateBundle& u_orig, double r_tilde) {
    KktReport rep = kkt_residuals(u_orig, prob_in);
    TraceRecord tr;
    tr.k = rs.k;
    tr.r = rs.r;
    tr.t = rs.t;
    tr.sigma = rs.sigma;
    tr.r_tilde = r_tilde;
    tr.eta_gap = rep.eta_gap;
    tr.eta_p = rep.eta_p;
    tr.eta_d = rep.eta_d;
    tr.seconds = elapsed_seconds(t_solve);
    res.trace.push_back(tr);
    return rep;
  };

  auto finish = [&](IterateBundle u_orig, KktReport rep, Status st) {
    rep.status = st;
    rep.iterations = rs.k;
    rep.restarts = rs.r;
    rep.sigma_final = rs.sigma;
    rep.solve_seconds = elapsed_seconds(t_solve);
    rep.data_seconds = res.report.data_seconds;
    rep.lambda_A = est.lambda_A;
    rep.lambda_Q = est.lambda_Q;
    res.report = rep;
    res.u = std::move(u_orig);
    return res;
  };

  {
    // The origin may already be optimal; check before iterating.
    IterateBundle u0 = kern.current();
    u0.z = Vec::Zero(prob.n);
    IterateBundle u0_orig = unscaled_bundle(u0);
    KktReport rep = record(u0_orig, 0.0);
    if (rep.within(cfg.tol))
      return finish(std::move(u0_orig), rep, Status::Optimal);
  }

  double r_tilde = 0.0;
  while (true) {
    const double merit_sq = kern.step(rs.sigma, rs.k);
    r_tilde = std::sqrt(merit_sq);
    if (cfg.keep_merit_history) res.merit_history.push_back(r_tilde);
    rs.t += 1;
    rs.k += 1;

    bool restart = false;
    if (rs.t == 1) {
      rs.r_tilde_first = r_tilde;
      rs.r_tilde_prev = r_tilde;
    }
    if (cfg.restarts)
      restart = check_restart(rs, r_tilde, cfg) == RestartDecision::Restart;
    rs.r_tilde_prev = r_tilde;

    if (cfg.cache_check_interval > 0 && rs.k % cfg.cache_check_interval == 0) {
      const double dev = kern.verify_caches();
      if (dev > 1e-9)
        throw Error("incremental product cache drifted: " + std::to_string(dev));
    }

    const bool cadence = rs.k % cfg.check_interval == 0;
    const bool iter_limit = rs.k >= cfg.max_iter;
    const bool time_limit = elapsed_seconds(t_solve) > cfg.time_limit;

    if (restart || cadence || iter_limit || time_limit) {
      IterateBundle ubar_orig = unscaled_bundle(kern.bar());
      KktReport rep = record(ubar_orig, r_tilde);
      if (rep.within(cfg.tol))
        return finish(std::move(ubar_orig), rep, Status::Optimal);
      if (time_limit)
        return finish(std::move(ubar_orig), rep, Status::TimeLimit);
      if (iter_limit)
        return finish(std::move(ubar_orig), rep, Status::IterLimit);
    }

    if (restart) {
      if (!rs.baseline_set) {
        rs.r_tilde_baseline = r_tilde;
        rs.baseline_set = true;
      }
      if (r_tilde / rs.r_tilde_baseline <= cfg.tighten_ratio)
        rs.tightened = true;
      if (cfg.sigma_updates)
        rs.sigma = sigma_update(kern.bar(), kern.anchor(), prob, est, rs, cfg);
      kern.restart_to_bar();
      rs.r += 1;
      rs.t = 0;
    }
  }
}

}  // namespace hprqp
