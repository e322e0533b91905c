#include "dense_qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace hprqp::test {

namespace {

struct Side {
  Index row;     // row of the stacked constraint matrix G = [A; I]
  double bound;  // finite bound value
  int sign;      // +1: Gx >= bound (lower side), -1: Gx <= bound (upper side)
};

double inf_norm_or_zero(const Vec& v) {
  return v.size() > 0 ? v.lpNorm<Eigen::Infinity>() : 0.0;
}

}  // namespace

DenseQpSolution solve_dense_qp(const Mat& Q, const Vec& c, const Mat& A,
                               const Vec& row_lo, const Vec& row_hi,
                               const Vec& x_lo, const Vec& x_hi, int max_iter) {
  const Index n = Q.rows();
  const Index m = A.rows();
  const Index mg = m + n;
  Mat G(mg, n);
  G.topRows(m) = A;
  G.bottomRows(n) = Mat::Identity(n, n);
  Vec glo(mg), ghi(mg);
  glo << row_lo, x_lo;
  ghi << row_hi, x_hi;

  // Equality rows and finite inequality sides.
  std::vector<Index> eq_rows;
  std::vector<Side> ineq;
  for (Index i = 0; i < mg; ++i) {
    if (glo[i] == ghi[i] && std::isfinite(glo[i])) {
      eq_rows.push_back(i);
    } else {
      if (std::isfinite(glo[i])) ineq.push_back({i, glo[i], +1});
      if (std::isfinite(ghi[i])) ineq.push_back({i, ghi[i], -1});
    }
  }
  const Index ne = static_cast<Index>(eq_rows.size());
  const Index ni = static_cast<Index>(ineq.size());

  Mat Ge(ne, n);
  Vec be(ne);
  for (Index k = 0; k < ne; ++k) {
    Ge.row(k) = G.row(eq_rows[static_cast<std::size_t>(k)]);
    be[k] = glo[eq_rows[static_cast<std::size_t>(k)]];
  }
  // Inequalities as Ci x >= di (sign folded in).
  Mat Ci(ni, n);
  Vec di(ni);
  for (Index k = 0; k < ni; ++k) {
    const Side& sd = ineq[static_cast<std::size_t>(k)];
    Ci.row(k) = sd.sign * G.row(sd.row);
    di[k] = sd.sign * sd.bound;
  }

  Vec x = Vec::Zero(n);
  Vec nu = Vec::Zero(ne);
  Vec s = Vec::Ones(ni), zi = Vec::Ones(ni);
  if (ni > 0) {
    const Vec r = Ci * x - di;
    for (Index k = 0; k < ni; ++k) s[k] = std::max(1.0, std::abs(r[k]));
  }

  DenseQpSolution sol;
  const Index dim = n + ne;
  Mat kkt(dim, dim);
  Vec rhs(dim);

  auto residuals = [&](Vec& rd, Vec& re, Vec& ri) {
    rd = Q * x + c;
    if (ne > 0) rd.noalias() -= Ge.transpose() * nu;
    if (ni > 0) rd.noalias() -= Ci.transpose() * zi;
    re = ne > 0 ? Vec(Ge * x - be) : Vec(0);
    ri = ni > 0 ? Vec(Ci * x - di - s) : Vec(0);
  };

  double mu = ni > 0 ? s.dot(zi) / static_cast<double>(ni) : 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vec rd, re, ri;
    residuals(rd, re, ri);
    mu = ni > 0 ? s.dot(zi) / static_cast<double>(ni) : 0.0;
    const double err = std::max(
        {inf_norm_or_zero(rd), inf_norm_or_zero(re), inf_norm_or_zero(ri), mu});
    sol.kkt_error = err;
    if (err < 1e-12) {
      sol.converged = true;
      break;
    }

    auto solve_newton = [&](const Vec& rcs) -> std::pair<Vec, Vec> {
      // Condensed system in (dx, -dnu); rcs is the complementarity target
      // S z - rcs = 0 linearized.
      Mat H = Q;
      Vec rx = -rd;
      for (Index k = 0; k < ni; ++k) {
        const double d = zi[k] / s[k];
        H.noalias() += d * (Ci.row(k).transpose() * Ci.row(k));
        // contribution of ds elimination: dz = (rcs - z ds)/s
        const double tmp = (rcs[k] - zi[k] * ri[k]) / s[k];
        rx.noalias() += tmp * Ci.row(k).transpose();
      }
      kkt.setZero();
      kkt.topLeftCorner(n, n) = H;
      if (ne > 0) {
        kkt.topRightCorner(n, ne) = Ge.transpose();
        kkt.bottomLeftCorner(ne, n) = Ge;
      }
      rhs.head(n) = rx;
      rhs.tail(ne) = -re;
      const Vec sn = kkt.fullPivLu().solve(rhs);
      return {sn.head(n), sn.tail(ne)};
    };

    // Predictor.
    Vec rcs_aff = -(s.cwiseProduct(zi));
    auto [dx_aff, dnu_aff] = solve_newton(rcs_aff);
    Vec ds_aff(ni), dz_aff(ni);
    if (ni > 0) {
      ds_aff = Ci * dx_aff + ri;
      for (Index k = 0; k < ni; ++k)
        dz_aff[k] = (rcs_aff[k] - zi[k] * ds_aff[k]) / s[k];
    }
    auto step_len = [&](const Vec& v, const Vec& dv) {
      double a = 1.0;
      for (Index k = 0; k < v.size(); ++k)
        if (dv[k] < 0.0) a = std::min(a, -v[k] / dv[k]);
      return a;
    };
    const double a_aff =
        ni > 0 ? std::min(step_len(s, ds_aff), step_len(zi, dz_aff)) : 1.0;
    double sigma_c = 0.0;
    if (ni > 0 && mu > 0.0) {
      const double mu_aff =
          (s + a_aff * ds_aff).dot(zi + a_aff * dz_aff) / static_cast<double>(ni);
      sigma_c = std::pow(mu_aff / mu, 3.0);
    }

    // Corrector.
    Vec rcs(ni);
    for (Index k = 0; k < ni; ++k)
      rcs[k] = sigma_c * mu - s[k] * zi[k] - ds_aff[k] * dz_aff[k];
    auto [dx, dnu] = solve_newton(ni > 0 ? rcs : rcs_aff);
    Vec ds(ni), dz(ni);
    if (ni > 0) {
      ds = Ci * dx + ri;
      for (Index k = 0; k < ni; ++k) dz[k] = (rcs[k] - zi[k] * ds[k]) / s[k];
    }
    const double a_max =
        ni > 0 ? std::min(step_len(s, ds), step_len(zi, dz)) : 1.0;
    const double a = std::min(1.0, 0.995 * a_max);
    x += a * dx;
    nu -= a * dnu;  // solve produced -dnu in the tail
    if (ni > 0) {
      s += a * ds;
      zi += a * dz;
    }
  }

  // Fold multipliers back to signed row/bound duals.
  Vec y = Vec::Zero(m), zb = Vec::Zero(n);
  auto add_dual = [&](Index grow, double val) {
    if (grow < m)
      y[grow] += val;
    else
      zb[grow - m] += val;
  };
  for (Index k = 0; k < ne; ++k) add_dual(eq_rows[static_cast<std::size_t>(k)], nu[k]);
  for (Index k = 0; k < ni; ++k)
    add_dual(ineq[static_cast<std::size_t>(k)].row,
             ineq[static_cast<std::size_t>(k)].sign * zi[k]);

  // Active-set polish: re-solve the equality-constrained KKT system on the
  // identified active rows to sharpen the interior-point answer.
  {
    std::vector<Index> act;
    std::vector<double> act_rhs;
    for (Index k = 0; k < ne; ++k) {
      act.push_back(eq_rows[static_cast<std::size_t>(k)]);
      act_rhs.push_back(be[k]);
    }
    for (Index k = 0; k < ni; ++k) {
      const double scale = std::max(1.0, std::abs(di[k]));
      if (s[k] < 1e-7 * scale && zi[k] > s[k]) {
        act.push_back(ineq[static_cast<std::size_t>(k)].row);
        act_rhs.push_back(ineq[static_cast<std::size_t>(k)].bound);
      }
    }
    const Index na = static_cast<Index>(act.size());
    Mat Ga(na, n);
    Vec ba(na);
    for (Index k = 0; k < na; ++k) {
      Ga.row(k) = G.row(act[static_cast<std::size_t>(k)]);
      ba[k] = act_rhs[static_cast<std::size_t>(k)];
    }
    Mat kkt2 = Mat::Zero(n + na, n + na);
    kkt2.topLeftCorner(n, n) = Q;
    if (na > 0) {
      kkt2.topRightCorner(n, na) = Ga.transpose();
      kkt2.bottomLeftCorner(na, n) = Ga;
    }
    Vec rhs2(n + na);
    rhs2.head(n) = -c;
    rhs2.tail(na) = ba;
    Eigen::FullPivLU<Mat> lu(kkt2);
    if (lu.isInvertible()) {
      const Vec sn = lu.solve(rhs2);
      const Vec xp = sn.head(n);
      const Vec lam = sn.tail(na);  // stationarity: Qx + c + Ga' lam = 0
      // Accept the polish only if it stays feasible and keeps dual signs.
      bool ok = true;
      for (Index i = 0; i < mg && ok; ++i) {
        const double gi = G.row(i).dot(xp);
        const double tol = 1e-8 * std::max(1.0, std::abs(gi));
        if (std::isfinite(glo[i]) && gi < glo[i] - tol) ok = false;
        if (std::isfinite(ghi[i]) && gi > ghi[i] + tol) ok = false;
      }
      Vec yp = Vec::Zero(m), zp = Vec::Zero(n);
      for (Index k = 0; k < na && ok; ++k) {
        const Index grow = act[static_cast<std::size_t>(k)];
        const double dual = -lam[k];  // convention used by add_dual
        const bool is_eq = glo[grow] == ghi[grow];
        if (!is_eq) {
          const bool at_lower =
              std::abs(ba[k] - glo[grow]) <= std::abs(ba[k] - ghi[grow]);
          if (at_lower && dual < -1e-9) ok = false;
          if (!at_lower && dual > 1e-9) ok = false;
        }
        if (grow < m)
          yp[grow] += dual;
        else
          zp[grow - m] += dual;
      }
      if (ok) {
        const Vec rd = Q * xp + c - A.transpose() * yp - zp;
        if (inf_norm_or_zero(rd) < 1e-8) {
          x = xp;
          y = yp;
          zb = zp;
          sol.polished = true;
        }
      }
    }
  }

  sol.x = x;
  sol.y = y;
  sol.z = zb;
  sol.objective = 0.5 * x.dot(Q * x) + c.dot(x);
  const Vec rd = Q * x + c - A.transpose() * y - zb;
  sol.kkt_error = inf_norm_or_zero(rd);
  return sol;
}

DenseQpSolution solve_dense_qp(const CcqpProblem& prob, int max_iter) {
  const Mat Q = Mat(prob.Q.matrix());
  const Mat A = Mat(prob.A);
  const Box& xb = prob.phi.box();
  return solve_dense_qp(Q, prob.c, A, prob.K.lower, prob.K.upper, xb.lower,
                        xb.upper, max_iter);
}

}  // namespace hprqp::test
