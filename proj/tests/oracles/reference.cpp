#include "reference.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hprqp::test {

Mat sym_pinv(const Mat& S, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  const Vec ev = es.eigenvalues();
  const double cutoff = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Vec inv = Vec::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i]) > cutoff) inv[i] = 1.0 / ev[i];
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Mat range_projector(const Mat& Q, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Q);
  const Vec ev = es.eigenvalues();
  const double cutoff = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), 1e-300);
  Mat P = Mat::Zero(Q.rows(), Q.cols());
  for (Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i]) > cutoff)
      P.noalias() += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
  return P;
}

Mat dense_m_matrix(const Mat& A, const Mat& Q, double sigma, double lambda_a,
                   double lambda_q) {
  const Index m = A.rows(), n = A.cols();
  const Mat Sy = lambda_a * Mat::Identity(m, m) - A * A.transpose();
  const Mat Sw = lambda_q * Q - Q * Q;
  const Mat inner = sigma * Q * Q + Q + sigma * Sw;
  const Mat sgs1 =
      sigma * sigma * A * Q * sym_pinv(inner) * Q * A.transpose();

  // A_Q = [A^T  -Q] : (y, w) -> A^T y - Q w, so A_Q^* x = (A x, -Q x).
  Mat aq(n, m + n);
  aq.leftCols(m) = A.transpose();
  aq.rightCols(n) = -Q;

  const Index dim = m + 3 * n;
  Mat M = Mat::Zero(dim, dim);
  // top-left block is sigma A_Q^* A_Q + T1 with T1 = S + S_sGS
  Mat top = sigma * aq.transpose() * aq;  // (m+n) x (m+n)
  top.topLeftCorner(m, m) += sigma * Sy + sgs1;
  top.bottomRightCorner(n, n) += sigma * Sw;
  // ordering: [y (m)] [w (n)] [z (n)] [x (n)]
  M.topLeftCorner(m + n, m + n) = top;
  M.block(0, m + 2 * n, m + n, n) = aq.transpose();
  M.block(m + 2 * n, 0, n, m + n) = aq;
  M.block(m + 2 * n, m + 2 * n, n, n) = Mat::Identity(n, n) / sigma;
  return M;
}

namespace {

Vec prox_phi_ref(const CompositeTerm& phi, double sigma, const Vec& r) {
  return prox_phi(phi, sigma, r);
}

// The z step shared by both references: zbar = (Prox_{sigma phi}(r_z) - r_z)/sigma.
Vec zbar_of(const CcqpProblem& prob, double sigma, const Vec& qw, const Vec& aty,
            const Vec& x) {
  const Vec r_z = x + sigma * (-qw + aty - prob.c);
  return (prox_phi_ref(prob.phi, sigma, r_z) - r_z) / sigma;
}

Vec aty_of(const CcqpProblem& prob, const Vec& y) {
  return prob.m > 0 ? Vec(prob.A.transpose() * y) : Vec::Zero(prob.n);
}

}  // namespace

RefShadow::RefShadow(const CcqpProblem& prob, double lambda_a, double lambda_q,
                     double sigma)
    : prob_(prob), la_(lambda_a), lq_(lambda_q), sigma_(sigma) {
  u_.y = Vec::Zero(prob.m);
  u_.w = Vec::Zero(prob.n);
  u_.z = Vec::Zero(prob.n);
  u_.x = Vec::Zero(prob.n);
  anchor_ = u_;
}

void RefShadow::set_start(const RefIterate& u0) {
  u_ = u0;
  anchor_ = u0;
}

RefIterate RefShadow::step(std::int64_t k) {
  const double sigma = sigma_;
  const Vec qw = prob_.Q.apply(u_.w);
  const Vec aty = aty_of(prob_, u_.y);
  RefIterate bar;
  bar.z = zbar_of(prob_, sigma, qw, aty, u_.x);
  bar.x = u_.x + sigma * (-qw + aty + bar.z - prob_.c);
  const double denom = 1.0 + sigma * lq_;
  const Vec wq_half =
      (sigma * lq_ * u_.w + bar.x + sigma * (-qw + aty + bar.z - prob_.c)) /
      denom;
  const Vec q_half = prob_.Q.apply(wq_half);
  if (prob_.m > 0) {
    const Vec r_y =
        prob_.A * (bar.x + sigma * (-q_half + aty + bar.z - prob_.c)) -
        sigma * la_ * u_.y;
    bar.y = (prob_.K.project(r_y) - r_y) / (sigma * la_);
  } else {
    bar.y = Vec(0);
  }
  const Vec atybar = aty_of(prob_, bar.y);
  bar.w =
      (sigma * lq_ * u_.w + bar.x + sigma * (-qw + atybar + bar.z - prob_.c)) /
      denom;

  const double b1 = 1.0 / static_cast<double>(k + 2);
  const double b2 = static_cast<double>(k + 1) / static_cast<double>(k + 2);
  u_.y = b1 * anchor_.y + b2 * (2.0 * bar.y - u_.y);
  u_.w = b1 * anchor_.w + b2 * (2.0 * bar.w - u_.w);
  u_.z = b1 * anchor_.z + b2 * (2.0 * bar.z - u_.z);
  u_.x = b1 * anchor_.x + b2 * (2.0 * bar.x - u_.x);
  return bar;
}

RefProjected::RefProjected(const CcqpProblem& prob, double lambda_a,
                           double lambda_q, double sigma)
    : prob_(prob), la_(lambda_a), lq_(lambda_q), sigma_(sigma) {
  proj_ = range_projector(Mat(prob.Q.matrix()));
  u_.y = Vec::Zero(prob.m);
  u_.w = Vec::Zero(prob.n);
  u_.z = Vec::Zero(prob.n);
  u_.x = Vec::Zero(prob.n);
  anchor_ = u_;
}

void RefProjected::set_start(const RefIterate& u0) {
  u_ = u0;
  anchor_ = u0;
}

RefIterate RefProjected::step(std::int64_t k) {
  const double sigma = sigma_;
  const Vec qw = prob_.Q.apply(u_.w);
  const Vec aty = aty_of(prob_, u_.y);
  RefIterate bar;
  bar.z = zbar_of(prob_, sigma, qw, aty, u_.x);
  bar.x = u_.x + sigma * (-qw + aty + bar.z - prob_.c);
  const double denom = 1.0 + sigma * lq_;
  const Vec w_half =
      proj_ *
      ((sigma * lq_ * u_.w + bar.x + sigma * (-qw + aty + bar.z - prob_.c)) /
       denom);
  const Vec q_half = prob_.Q.apply(w_half);
  if (prob_.m > 0) {
    const Vec r_y =
        prob_.A * (bar.x + sigma * (-q_half + aty + bar.z - prob_.c)) -
        sigma * la_ * u_.y;
    bar.y = (prob_.K.project(r_y) - r_y) / (sigma * la_);
  } else {
    bar.y = Vec(0);
  }
  const Vec atybar = aty_of(prob_, bar.y);
  bar.w = proj_ * ((sigma * lq_ * u_.w + bar.x +
                    sigma * (-qw + atybar + bar.z - prob_.c)) /
                   denom);

  const double b1 = 1.0 / static_cast<double>(k + 2);
  const double b2 = static_cast<double>(k + 1) / static_cast<double>(k + 2);
  u_.y = b1 * anchor_.y + b2 * (2.0 * bar.y - u_.y);
  u_.w = b1 * anchor_.w + b2 * (2.0 * bar.w - u_.w);
  u_.z = b1 * anchor_.z + b2 * (2.0 * bar.z - u_.z);
  u_.x = b1 * anchor_.x + b2 * (2.0 * bar.x - u_.x);
  return bar;
}

JointYW joint_yw_argmin(const Mat& A, const Mat& Q, const Vec& c,
                        const Vec& k_lo, const Vec& k_hi, double sigma,
                        double lambda_a, double lambda_q, const Vec& y_k,
                        const Vec& w_k, const Vec& zbar, const Vec& xbar) {
  const Index m = A.rows(), n = A.cols();
  // H = H0 + T1 on (y, w); g collects the linear part.
  Mat aq(n, m + n);
  aq.leftCols(m) = A.transpose();
  aq.rightCols(n) = -Q;
  Mat H = sigma * aq.transpose() * aq;
  H.bottomRightCorner(n, n) += Q;
  const Mat Sy = lambda_a * Mat::Identity(m, m) - A * A.transpose();
  const Mat Sw = lambda_q * Q - Q * Q;
  H.topLeftCorner(m, m) += sigma * Sy;
  H.bottomRightCorner(n, n) += sigma * Sw;
  const Mat inner = sigma * Q * Q + Q + sigma * Sw;
  H.topLeftCorner(m, m) +=
      sigma * sigma * A * Q * inner.inverse() * Q * A.transpose();

  Vec vk(m + n);
  vk << y_k, w_k;
  Mat T1 = H - (sigma * aq.transpose() * aq);
  T1.bottomRightCorner(n, n) -= Q;  // T1 alone, without the H0 part
  Vec g = aq.transpose() * (xbar + sigma * (zbar - c));
  g.noalias() -= T1 * vk;

  // Eliminate w: w(y) = -Hww^{-1} (Hwy y + gw).
  const Mat Hyy = H.topLeftCorner(m, m);
  const Mat Hyw = H.topRightCorner(m, n);
  const Mat Hww = H.bottomRightCorner(n, n);
  const Mat Hww_inv = Hww.inverse();
  const Mat Ht = Hyy - Hyw * Hww_inv * Hyw.transpose();
  const Vec gt = g.head(m) - Hyw * Hww_inv * g.tail(n);

  // delta_K^*(-y) is piecewise linear: slope -lo_i for y_i > 0, -hi_i for
  // y_i < 0, subdifferential [-hi_i, -lo_i] at 0. Enumerate sign patterns.
  const Index patterns = static_cast<Index>(std::pow(3.0, static_cast<double>(m)));
  Vec best_y;
  double best_val = kInf;
  for (Index code = 0; code < patterns; ++code) {
    Index rem = code;
    std::vector<int> sign(static_cast<std::size_t>(m));
    std::vector<Index> free;
    for (Index i = 0; i < m; ++i) {
      const int s = static_cast<int>(rem % 3) - 1;  // -1, 0, +1
      rem /= 3;
      sign[static_cast<std::size_t>(i)] = s;
      if (s != 0) free.push_back(i);
    }
    const Index nf = static_cast<Index>(free.size());
    Mat Hf(nf, nf);
    Vec rf(nf);
    for (Index a = 0; a < nf; ++a) {
      for (Index b = 0; b < nf; ++b) Hf(a, b) = Ht(free[a], free[b]);
      const int s = sign[static_cast<std::size_t>(free[a])];
      const double slope = s > 0 ? -k_lo[free[a]] : -k_hi[free[a]];
      rf[a] = -(gt[free[a]] + slope);
    }
    Vec yf = nf > 0 ? Vec(Hf.fullPivLu().solve(rf)) : Vec(0);
    Vec y = Vec::Zero(m);
    bool ok = true;
    for (Index a = 0; a < nf && ok; ++a) {
      y[free[a]] = yf[a];
      if (static_cast<double>(sign[static_cast<std::size_t>(free[a])]) * yf[a] <
          -1e-12)
        ok = false;
    }
    if (!ok) continue;
    const Vec grad = Ht * y + gt;
    for (Index i = 0; i < m && ok; ++i) {
      if (sign[static_cast<std::size_t>(i)] != 0) continue;
      const double tol = 1e-8 * (1.0 + std::abs(k_lo[i]) + std::abs(k_hi[i]));
      if (grad[i] < k_lo[i] - tol || grad[i] > k_hi[i] + tol) ok = false;
    }
    if (!ok) continue;
    // value of the reduced objective (support term + quadratic)
    double val = 0.5 * y.dot(Ht * y) + gt.dot(y);
    for (Index i = 0; i < m; ++i)
      val += y[i] > 0 ? -k_lo[i] * y[i] : -k_hi[i] * y[i];
    if (val < best_val) {
      best_val = val;
      best_y = y;
    }
  }
  if (best_y.size() == 0)
    throw Error("joint_yw_argmin: no consistent sign pattern found");
  JointYW out;
  out.y = best_y;
  out.w = -Hww_inv * (Hyw.transpose() * best_y + g.tail(n));
  return out;
}

Vec lasso_cd(const SpMat& A, const Vec& b, double lambda, int max_sweeps,
             double tol) {
  const Index q = A.cols();
  Vec x = Vec::Zero(q);
  Vec col_sq(q);
  for (Index j = 0; j < q; ++j) col_sq[j] = A.col(j).squaredNorm();
  Vec r = -b;  // residual A x - b
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Index j = 0; j < q; ++j) {
      if (col_sq[j] == 0.0) continue;
      double rho = 0.0;
      for (SpMat::InnerIterator it(A, j); it; ++it)
        rho += it.value() * r[it.row()];
      rho = x[j] * col_sq[j] - rho;
      const double mag = std::abs(rho) - lambda;
      const double xj = mag > 0.0 ? std::copysign(mag, rho) / col_sq[j] : 0.0;
      const double delta = xj - x[j];
      if (delta != 0.0) {
        for (SpMat::InnerIterator it(A, j); it; ++it)
          r[it.row()] += it.value() * delta;
        x[j] = xj;
        max_change = std::max(max_change, std::abs(delta));
      }
    }
    if (max_change < tol) break;
  }
  return x;
}

double lasso_objective(const SpMat& A, const Vec& b, double lambda,
                       const Vec& x) {
  return 0.5 * (A * x - b).squaredNorm() + lambda * x.lpNorm<1>();
}

double min_assignment_bruteforce(const Vec& alpha, const Vec& beta) {
  const Index d = alpha.size();
  std::vector<Index> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), Index(0));
  double best = kInf;
  do {
    double v = 0.0;
    for (Index i = 0; i < d; ++i) v += alpha[i] * beta[perm[static_cast<std::size_t>(i)]];
    best = std::min(best, v);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Mat kron_qhat_dense(const Mat& A_hat, const Mat& B_hat, const Mat& S,
                    const Mat& T) {
  const Index d = A_hat.rows();
  const Index n = d * d;
  Mat out(n, n);
  const Mat I = Mat::Identity(d, d);
  auto kron = [d](const Mat& X, const Mat& Y) {
    Mat K(d * d, d * d);
    for (Index i = 0; i < d; ++i)
      for (Index j = 0; j < d; ++j)
        K.block(i * d, j * d, d, d) = X(i, j) * Y;
    return K;
  };
  out = kron(B_hat, A_hat) - kron(I, S) - kron(T, I);
  return out;
}

}  // namespace hprqp::test
