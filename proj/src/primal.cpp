#include "hprqp/primal.hpp"

#include <chrono>
#include <cmath>

namespace hprqp {

Variant variant_from_string(const std::string& s) {
  if (s == "dual") return Variant::Dual;
  if (s == "primal1" || s == "p1") return Variant::P1;
  if (s == "primal2" || s == "p2") return Variant::P2;
  throw Error("unknown variant: " + s);
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Dual: return "dual";
    case Variant::P1: return "primal1";
    case Variant::P2: return "primal2";
  }
  return "?";
}

namespace {

double elapsed_seconds(std::chrono::steady_clock::time_point from) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - from)
      .count();
}

double clamp_merit(double v, double scale) {
  if (v < -1e-9 * std::max(scale, 1.0))
    throw Error("primal merit norm evaluated negative");
  return std::max(v, 0.0);
}

// Shared shape of one primal splitting: a step producing the bar iterate and
// the merit, plus hooks for restarts, penalty coefficients and reporting.
struct P1State {
  const CcqpProblem& prob;
  double la, lq;
  Vec x, s, y;
  Vec x0, s0, y0;
  Vec xb, sb, yb, zb;
  Vec ax, qx, g, a_pt, axb, qxb;
  double last_sigma = 0.0;

  P1State(const CcqpProblem& p, double lambda_a, double lambda_q)
      : prob(p), la(lambda_a), lq(lambda_q) {
    x = Vec::Zero(p.n);
    s = Vec::Zero(p.m);
    y = Vec::Zero(p.m);
    x0 = x;
    s0 = s;
    y0 = y;
  }

  double step(double sigma, std::int64_t k) {
    const double gamma = lq + sigma * la;
    if (!(gamma > 0.0)) throw Error("primal1 needs a nonzero A or Q");
    ax.noalias() = prob.A * x;
    qx = prob.Q.apply(x);
    sb = prob.K.project(ax - y / sigma);
    yb = y + sigma * (sb - ax);
    g = qx + prob.c;
    g.noalias() -= prob.A.transpose() * (yb - sigma * (ax - sb));
    a_pt = x - g / gamma;
    prox_phi(prob.phi, 1.0 / gamma, a_pt, xb);
    zb = gamma * (xb - a_pt);

    axb.noalias() = prob.A * xb;
    qxb = prob.Q.apply(xb);
    const Vec dx = x - xb;
    const double t1 = gamma * dx.squaredNorm();
    const double t2 = -dx.dot(qx - qxb);
    const double t3 = -2.0 * (ax - axb).dot(y - yb);
    const double t4 = (y - yb).squaredNorm() / sigma;
    const double merit =
        clamp_merit(t1 + t2 + t3 + t4,
                    std::abs(t1) + std::abs(t2) + std::abs(t3) + std::abs(t4));
    if (!std::isfinite(merit)) throw NumericalBreakdown("primal1 iterate");

    const double b1 = 1.0 / static_cast<double>(k + 2);
    const double b2 = static_cast<double>(k + 1) / static_cast<double>(k + 2);
    x = b1 * x0 + b2 * (2.0 * xb - x);
    s = b1 * s0 + b2 * (2.0 * sb - s);
    y = b1 * y0 + b2 * (2.0 * yb - y);
    last_sigma = sigma;
    return merit;
  }

  void restart_to_bar() {
    x = xb;
    s = sb;
    y = yb;
    x0 = x;
    s0 = s;
    y0 = y;
  }

  // f(sigma) coefficients from the epoch displacement of the sigma-dependent
  // blocks of this splitting's metric.
  void sigma_thetas(double& th1, double& th2) const {
    th1 = la * (xb - x0).squaredNorm();
    th2 = (yb - y0).squaredNorm();
  }
};

struct P2State {
  const CcqpProblem& prob;
  double la, lq;
  Vec x, s, v, y, t;
  Vec x0, s0, v0, y0, t0;
  Vec xb, sb, vb, yb, tb, zb;
  Vec ax, qv, qvb, g, a_pt, axb;
  double last_sigma = 0.0;

  P2State(const CcqpProblem& p, double lambda_a, double lambda_q)
      : prob(p), la(lambda_a), lq(lambda_q) {
    x = Vec::Zero(p.n);
    s = Vec::Zero(p.m);
    v = Vec::Zero(p.n);
    y = Vec::Zero(p.m);
    t = Vec::Zero(p.n);
    x0 = x;
    s0 = s;
    v0 = v;
    y0 = y;
    t0 = t;
  }

  double step(double sigma, std::int64_t k) {
    const double gamma = sigma * (1.0 + la);
    ax.noalias() = prob.A * x;
    qv = prob.Q.apply(v);
    sb = prob.K.project(ax - y / sigma);
    vb = (sigma * x - t + lq * v - qv) / (sigma + lq);
    yb = y + sigma * (sb - ax);
    tb = t + sigma * (vb - x);
    g = prob.c - tb + sigma * (x - vb);
    g.noalias() -= prob.A.transpose() * (yb - sigma * (ax - sb));
    a_pt = x - g / gamma;
    prox_phi(prob.phi, 1.0 / gamma, a_pt, xb);
    zb = gamma * (xb - a_pt);

    axb.noalias() = prob.A * xb;
    qvb = prob.Q.apply(vb);
    const Vec dx = x - xb;
    const Vec dv = v - vb;
    const double t1 = gamma * dx.squaredNorm();
    const double t2 = lq * dv.squaredNorm() - dv.dot(qv - qvb);
    const double t3 = -2.0 * (ax - axb).dot(y - yb);
    const double t4 = -2.0 * dx.dot(t - tb);
    const double t5 = ((y - yb).squaredNorm() + (t - tb).squaredNorm()) / sigma;
    const double merit = clamp_merit(
        t1 + t2 + t3 + t4 + t5, std::abs(t1) + std::abs(t2) + std::abs(t3) +
                                    std::abs(t4) + std::abs(t5));
    if (!std::isfinite(merit)) throw NumericalBreakdown("primal2 iterate");

    const double b1 = 1.0 / static_cast<double>(k + 2);
    const double b2 = static_cast<double>(k + 1) / static_cast<double>(k + 2);
    x = b1 * x0 + b2 * (2.0 * xb - x);
    s = b1 * s0 + b2 * (2.0 * sb - s);
    v = b1 * v0 + b2 * (2.0 * vb - v);
    y = b1 * y0 + b2 * (2.0 * yb - y);
    t = b1 * t0 + b2 * (2.0 * tb - t);
    last_sigma = sigma;
    return merit;
  }

  void restart_to_bar() {
    x = xb;
    s = sb;
    v = vb;
    y = yb;
    t = tb;
    x0 = x;
    s0 = s;
    v0 = v;
    y0 = y;
    t0 = t;
  }

  void sigma_thetas(double& th1, double& th2) const {
    th1 = (1.0 + la) * (xb - x0).squaredNorm();
    th2 = (yb - y0).squaredNorm() + (tb - t0).squaredNorm();
  }
};

double initial_sigma(const CcqpProblem& prob, const SolverConfig& cfg) {
  if (cfg.sigma0 > 0.0) return cfg.sigma0;
  const double nb = prob.K.finite_bound_magnitudes().norm();
  const double nc = prob.c.norm();
  const bool ok = nb >= 1e-16 && nb <= 1e16 && nc >= 1e-16 && nc <= 1e16;
  return ok ? nb / nc : 1.0;
}

template <class State>
SolveResult run_primal(const CcqpProblem& prob_in, const SolverConfig& cfg) {
  cfg.validate();
  prob_in.validate();
  if (prob_in.phi.kind() != CompositeTerm::Kind::BoxIndicator)
    throw Error("primal variants support box composite terms only");
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
  State st(prob, est.lambda_A, est.lambda_Q);
  RestartState rs;
  rs.sigma = initial_sigma(prob, cfg);

  auto bundle_orig = [&](const Vec& x, const Vec& y, const Vec& z) {
    IterateBundle u;
    if (info.applied) {
      u.x = x.cwiseProduct(info.col);
      u.y = y.cwiseProduct(info.row);
      u.z = z.cwiseQuotient(info.col);
    } else {
      u.x = x;
      u.y = y;
      u.z = z;
    }
    return u;
  };

  auto record = [&](const IterateBundle& u_orig, double r_tilde) {
    KktReport rep = kkt_residuals(u_orig, prob_in);
    res.trace.push_back({rs.k, rs.r, rs.t, rs.sigma, r_tilde, rep.eta_gap,
                         rep.eta_p, rep.eta_d, elapsed_seconds(t_solve)});
    return rep;
  };

  auto finish = [&](IterateBundle u_orig, KktReport rep, Status status) {
    rep.status = status;
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
    IterateBundle u0 =
        bundle_orig(Vec::Zero(prob.n), Vec::Zero(prob.m), Vec::Zero(prob.n));
    KktReport rep = record(u0, 0.0);
    if (rep.within(cfg.tol)) return finish(std::move(u0), rep, Status::Optimal);
  }

  while (true) {
    const double merit_sq = st.step(rs.sigma, rs.k);
    const double r_tilde = std::sqrt(merit_sq);
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

    const bool cadence = rs.k % cfg.check_interval == 0;
    const bool iter_limit = rs.k >= cfg.max_iter;
    const bool time_limit = elapsed_seconds(t_solve) > cfg.time_limit;

    if (restart || cadence || iter_limit || time_limit) {
      IterateBundle u = bundle_orig(st.xb, st.yb, st.zb);
      KktReport rep = record(u, r_tilde);
      if (rep.within(cfg.tol)) return finish(std::move(u), rep, Status::Optimal);
      if (time_limit) return finish(std::move(u), rep, Status::TimeLimit);
      if (iter_limit) return finish(std::move(u), rep, Status::IterLimit);
    }

    if (restart) {
      if (!rs.baseline_set) {
        rs.r_tilde_baseline = r_tilde;
        rs.baseline_set = true;
      }
      if (r_tilde / rs.r_tilde_baseline <= cfg.tighten_ratio)
        rs.tightened = true;
      if (cfg.sigma_updates) {
        double th1 = 0.0, th2 = 0.0;
        st.sigma_thetas(th1, th2);
        if (std::isfinite(th1) && std::isfinite(th2)) {
          th1 = std::max(th1, 1e-12);
          th2 = std::max(th2, 1e-12);
          const double sigma_new = golden_section_log_sigma(
              [&](double s) { return sigma_objective(s, th1, th2, 0.0, 0.0); },
              cfg.sigma_bracket_lo, cfg.sigma_bracket_hi, cfg.golden_rel_tol);
          const double beta = std::exp(-rs.r_tilde_prev /
                                       std::max(rs.r_tilde_baseline, 1e-300));
          rs.sigma = std::exp(beta * std::log(sigma_new) +
                              (1.0 - beta) * std::log(rs.sigma));
        }
      }
      st.restart_to_bar();
      rs.r += 1;
      rs.t = 0;
    }
  }
}

}  // namespace

SolveResult solve_primal_variant(const CcqpProblem& prob,
                                 const SolverConfig& cfg, Variant variant) {
  switch (variant) {
    case Variant::P1: return run_primal<P1State>(prob, cfg);
    case Variant::P2: return run_primal<P2State>(prob, cfg);
    case Variant::Dual: break;
  }
  throw Error("solve_primal_variant expects P1 or P2");
}

SolveResult solve_variant(const CcqpProblem& prob, const SolverConfig& cfg,
                          Variant variant) {
  if (variant == Variant::Dual) return solve(prob, cfg);
  return solve_primal_variant(prob, cfg, variant);
}

}  // namespace hprqp
