#include "hprqp/generators.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <vector>

#include "hprqp/rng.hpp"

namespace hprqp {

CcqpProblem gen_random_qp(Index n, Index m, double density,
                          std::uint64_t seed) {
  if (n < 1 || m < 1) throw Error("gen_random_qp: need n, m >= 1");
  if (!(density > 0.0 && density <= 1.0))
    throw Error("gen_random_qp: density must be in (0, 1]");
  Rng rng(seed);

  const Index per_row = std::clamp<Index>(
      static_cast<Index>(std::lround(density * static_cast<double>(n))),
      Index(1), n);
  std::vector<Triplet> ta;
  ta.reserve(static_cast<std::size_t>(per_row * m));
  std::set<Index> cols;
  for (Index i = 0; i < m; ++i) {
    cols.clear();
    while (static_cast<Index>(cols.size()) < per_row)
      cols.insert(rng.uniform_int(0, n - 1));
    for (Index j : cols) ta.emplace_back(i, j, rng.normal());
  }
  SpMat a(m, n);
  a.setFromTriplets(ta.begin(), ta.end());

  // Q = M^T M + 1e-2 I with two entries per row of M: about 5n nonzeros.
  std::vector<Triplet> tm;
  tm.reserve(static_cast<std::size_t>(2 * n));
  for (Index i = 0; i < n; ++i) {
    const Index j1 = rng.uniform_int(0, n - 1);
    Index j2 = rng.uniform_int(0, n - 1);
    if (j2 == j1) j2 = (j1 + 1) % n;
    tm.emplace_back(i, j1, rng.normal());
    tm.emplace_back(i, j2, rng.normal());
  }
  SpMat msp(n, n);
  msp.setFromTriplets(tm.begin(), tm.end());
  SpMat gram = SpMat(msp.transpose()) * msp;
  SpMat eye(n, n);
  eye.setIdentity();
  SpMat q = gram + 1e-2 * eye;

  Vec c(n);
  for (Index i = 0; i < n; ++i) c[i] = rng.normal();

  Vec kl(m), ku(m);
  for (Index i = 0; i < m; ++i) {
    const double center = rng.normal();
    if (rng.uniform() < 0.3) {
      kl[i] = ku[i] = center;  // equality row
    } else {
      const double half = std::abs(rng.normal()) + 0.1;
      kl[i] = center - half;
      ku[i] = center + half;
    }
  }

  Vec xl(n), xu(n);
  for (Index i = 0; i < n; ++i) {
    if (rng.uniform() < 0.8) {
      xl[i] = -(std::abs(rng.normal()) + 1.0);
      xu[i] = std::abs(rng.normal()) + 1.0;
    } else {
      xl[i] = -kInf;
      xu[i] = kInf;
    }
  }

  return make_ccqp(PsdOperator::explicit_sparse(std::move(q)), std::move(a),
                   std::move(c), Box(std::move(kl), std::move(ku)),
                   CompositeTerm::box_indicator(std::move(xl), std::move(xu)),
                   "random_qp");
}

LassoInstance gen_lasso(Index p, Index q, double density, std::uint64_t seed,
                        LassoLambdaRule rule) {
  if (p < 1 || q < 1) throw Error("gen_lasso: need p, q >= 1");
  Rng rng(seed);
  std::vector<Triplet> ta;
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < q; ++j)
      if (rng.uniform() < density) ta.emplace_back(i, j, rng.normal());
  SpMat a(p, q);
  a.setFromTriplets(ta.begin(), ta.end());

  // Sparse ground truth plus noise.
  Vec xt = Vec::Zero(q);
  for (Index j = 0; j < q; ++j)
    if (rng.uniform() < 0.1) xt[j] = rng.normal();
  Vec b = a * xt;
  for (Index i = 0; i < p; ++i) b[i] += 0.01 * rng.normal();

  LassoInstance inst;
  const double atb_inf = (a.transpose() * b).lpNorm<Eigen::Infinity>();
  const double base = atb_inf > 0.0 ? atb_inf : 1.0;
  inst.lambda = (rule == LassoLambdaRule::Thousandth ? 1e-3 : 0.2) * base;
  inst.A_hat = std::move(a);
  inst.b_hat = std::move(b);
  return inst;
}

CcqpProblem lasso_to_cqp(const LassoInstance& inst) {
  const Index p = inst.A_hat.rows(), q = inst.A_hat.cols();
  const Index n = q + p + q;  // (x, s, t)
  const Index m = p + 2 * q;

  std::vector<Triplet> ta;
  ta.reserve(static_cast<std::size_t>(inst.A_hat.nonZeros()) + p + 4 * q);
  // rows 0..p-1:  A x - s = b
  for (Index j = 0; j < inst.A_hat.outerSize(); ++j)
    for (SpMat::InnerIterator it(inst.A_hat, j); it; ++it)
      ta.emplace_back(it.row(), it.col(), it.value());
  for (Index i = 0; i < p; ++i) ta.emplace_back(i, q + i, -1.0);
  // rows p..p+q-1:  x - t <= 0 ; rows p+q..p+2q-1:  -x - t <= 0
  for (Index j = 0; j < q; ++j) {
    ta.emplace_back(p + j, j, 1.0);
    ta.emplace_back(p + j, q + p + j, -1.0);
    ta.emplace_back(p + q + j, j, -1.0);
    ta.emplace_back(p + q + j, q + p + j, -1.0);
  }
  SpMat a(m, n);
  a.setFromTriplets(ta.begin(), ta.end());

  SpMat qm(n, n);
  std::vector<Triplet> tq;
  for (Index i = 0; i < p; ++i) tq.emplace_back(q + i, q + i, 1.0);
  qm.setFromTriplets(tq.begin(), tq.end());

  Vec c = Vec::Zero(n);
  c.segment(q + p, q).setConstant(inst.lambda);

  Vec kl(m), ku(m);
  kl.segment(0, p) = inst.b_hat;
  ku.segment(0, p) = inst.b_hat;
  kl.segment(p, 2 * q).setConstant(-kInf);
  ku.segment(p, 2 * q).setZero();

  return make_ccqp(PsdOperator::explicit_sparse(std::move(qm)), std::move(a),
                   std::move(c), Box(std::move(kl), std::move(ku)),
                   CompositeTerm::box_indicator(Vec::Constant(n, -kInf),
                                                Vec::Constant(n, kInf)),
                   "lasso_cqp");
}

CcqpProblem lasso_native(const LassoInstance& inst) {
  const Index q = inst.A_hat.cols();
  auto ah = std::make_shared<const SpMat>(inst.A_hat);
  auto apply = [ah](const Vec& v, Vec& out) {
    out.noalias() = ah->transpose() * (*ah * v);
  };
  PsdOperator qop = PsdOperator::matrix_free(q, apply, "lasso_gram");
  Vec c = -(inst.A_hat.transpose() * inst.b_hat);
  const double obj_const = 0.5 * inst.b_hat.squaredNorm();
  return make_ccqp(std::move(qop), SpMat(0, q), std::move(c),
                   Box(Vec(0), Vec(0)),
                   CompositeTerm::weighted_l1(inst.lambda, q), "lasso_native",
                   obj_const);
}

Vec QapInstance::apply_qhat(const Vec& v) const {
  if (v.size() != d * d) throw DimensionError("apply_qhat: wrong length");
  const Eigen::Map<const Mat> x(v.data(), d, d);
  Mat out = A_hat * x * B_hat - S * x - x * T;
  return Eigen::Map<Vec>(out.data(), d * d);
}

QapGenerated gen_qap(Index d, std::uint64_t seed) {
  if (d < 2) throw Error("gen_qap: need d >= 2");
  Rng rng(seed);

  // A_hat: pairwise distances of d points in the unit square.
  Mat pts(d, 2);
  for (Index i = 0; i < d; ++i) {
    pts(i, 0) = rng.uniform();
    pts(i, 1) = rng.uniform();
  }
  Mat ah(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      ah(i, j) = (pts.row(i) - pts.row(j)).norm();

  // B_hat: symmetric uniform [0,1) entries with zero diagonal.
  Mat bh = Mat::Zero(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) bh(i, j) = bh(j, i) = rng.uniform();

  auto inst = std::make_shared<QapInstance>();
  inst->d = d;
  inst->A_hat = ah;
  inst->B_hat = bh;

  Eigen::SelfAdjointEigenSolver<Mat> ea(ah), eb(bh);
  if (ea.info() != Eigen::Success || eb.info() != Eigen::Success)
    throw Error("gen_qap: eigendecomposition failed");
  // alpha descending, beta ascending.
  inst->alpha = ea.eigenvalues().reverse();
  inst->V_A = ea.eigenvectors().rowwise().reverse();
  inst->beta = eb.eigenvalues();
  inst->V_B = eb.eigenvectors();

  // Duals of the assignment LP with costs alpha_i * beta_j. With alpha
  // descending and beta ascending the identity matching is optimal, and
  //   t_1 = 0, t_j = t_{j-1} + alpha_j (beta_j - beta_{j-1}),
  //   s_i = alpha_i beta_i - t_i
  // is feasible with value sum_i alpha_i beta_i.
  inst->t_bar = Vec::Zero(d);
  for (Index j = 1; j < d; ++j)
    inst->t_bar[j] =
        inst->t_bar[j - 1] + inst->alpha[j] * (inst->beta[j] - inst->beta[j - 1]);
  inst->s_bar = Vec(d);
  for (Index i = 0; i < d; ++i)
    inst->s_bar[i] = inst->alpha[i] * inst->beta[i] - inst->t_bar[i];

  inst->S = inst->V_A * inst->s_bar.asDiagonal() * inst->V_A.transpose();
  inst->T = inst->V_B * inst->t_bar.asDiagonal() * inst->V_B.transpose();

  const Index n = d * d;
  auto apply = [inst](const Vec& v, Vec& out) { out = inst->apply_qhat(v); };
  PsdOperator qop = PsdOperator::matrix_free(n, apply, "qap");

  // Row sums and column sums of X equal e.
  std::vector<Triplet> ta;
  ta.reserve(static_cast<std::size_t>(2 * n));
  for (Index j = 0; j < d; ++j)
    for (Index i = 0; i < d; ++i) {
      ta.emplace_back(i, i + j * d, 1.0);          // (e^T kron I) vec(X) = X e
      ta.emplace_back(d + j, i + j * d, 1.0);      // (I kron e^T) vec(X) = X^T e
    }
  SpMat a(2 * d, n);
  a.setFromTriplets(ta.begin(), ta.end());

  QapGenerated out;
  out.inst = *inst;
  out.problem = make_ccqp(
      std::move(qop), std::move(a), Vec::Zero(n),
      Box(Vec::Ones(2 * d), Vec::Ones(2 * d)),
      CompositeTerm::box_indicator(Vec::Zero(n), Vec::Constant(n, kInf)),
      "qap_" + std::to_string(d));
  return out;
}

}  // namespace hprqp
