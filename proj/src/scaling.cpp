#include "hprqp/scaling.hpp"

#include <cmath>

namespace hprqp {

ScalingInfo ScalingInfo::identity(Index m, Index n) {
  ScalingInfo info;
  info.row = Vec::Ones(m);
  info.col = Vec::Ones(n);
  return info;
}

ScalingInfo ScalingInfo::composed_with(const ScalingInfo& later) const {
  ScalingInfo out;
  out.row = row.cwiseProduct(later.row);
  out.col = col.cwiseProduct(later.col);
  out.obj_scale = obj_scale * later.obj_scale;
  out.applied = applied || later.applied;
  return out;
}

bool scaling_applicable(const CcqpProblem& prob) {
  return prob.Q.is_explicit() &&
         prob.phi.kind() == CompositeTerm::Kind::BoxIndicator;
}

namespace {

SpMat scale_sparse(const SpMat& a, const Vec& dr, const Vec& dc) {
  SpMat out = a;
  for (Index j = 0; j < out.outerSize(); ++j)
    for (SpMat::InnerIterator it(out, j); it; ++it)
      it.valueRef() *= dr[it.row()] * dc[it.col()];
  return out;
}

Vec scale_bound(const Vec& b, const Vec& d) {
  Vec out(b.size());
  for (Index i = 0; i < b.size(); ++i)
    out[i] = std::isfinite(b[i]) ? b[i] * d[i] : b[i];
  return out;
}

}  // namespace

CcqpProblem apply_scaling(const CcqpProblem& prob, const ScalingInfo& info) {
  CcqpProblem out = prob;
  out.A = scale_sparse(prob.A, info.row, info.col);
  SpMat q = scale_sparse(prob.Q.matrix(), info.col, info.col);
  if (info.obj_scale != 1.0) q *= info.obj_scale;
  out.Q = PsdOperator::explicit_sparse(std::move(q));
  out.c = prob.c.cwiseProduct(info.col) * info.obj_scale;
  out.K = Box(scale_bound(prob.K.lower, info.row),
              scale_bound(prob.K.upper, info.row));
  const Box& b = prob.phi.box();
  out.phi = CompositeTerm::box_indicator(
      scale_bound(b.lower, info.col.cwiseInverse()),
      scale_bound(b.upper, info.col.cwiseInverse()));
  return out;
}

std::pair<CcqpProblem, ScalingInfo> ruiz_equilibrate(const CcqpProblem& prob,
                                                     int iters) {
  if (!scaling_applicable(prob))
    throw Error("ruiz_equilibrate requires explicit Q and a box composite term");
  const Index n = prob.n, m = prob.m;
  const SpMat& A = prob.A;
  const SpMat& Q = prob.Q.matrix();
  // d = (d_col for the Q/A^T rows, d_row for the A rows) of the stacked block.
  Vec dc = Vec::Ones(n), dr = Vec::Ones(m);
  Vec rc(n), rr(m);
  for (int it = 0; it < iters; ++it) {
    rc.setZero();
    rr.setZero();
    // Row inf-norms of the scaled stacked block [[Q, A^T], [A, 0]].
    for (Index j = 0; j < Q.outerSize(); ++j)
      for (SpMat::InnerIterator e(Q, j); e; ++e) {
        const double v = std::abs(dc[e.row()] * e.value() * dc[e.col()]);
        rc[e.row()] = std::max(rc[e.row()], v);
      }
    for (Index j = 0; j < A.outerSize(); ++j)
      for (SpMat::InnerIterator e(A, j); e; ++e) {
        const double v = std::abs(dr[e.row()] * e.value() * dc[e.col()]);
        rr[e.row()] = std::max(rr[e.row()], v);
        rc[e.col()] = std::max(rc[e.col()], v);
      }
    for (Index i = 0; i < n; ++i)
      if (rc[i] > 0.0) dc[i] /= std::sqrt(rc[i]);
    for (Index i = 0; i < m; ++i)
      if (rr[i] > 0.0) dr[i] /= std::sqrt(rr[i]);
  }
  ScalingInfo info;
  info.row = dr;
  info.col = dc;
  info.applied = true;
  return {apply_scaling(prob, info), info};
}

std::pair<CcqpProblem, ScalingInfo> pock_chambolle(const CcqpProblem& prob,
                                                   double alpha) {
  if (!scaling_applicable(prob))
    throw Error("pock_chambolle requires explicit Q and a box composite term");
  const SpMat& A = prob.A;
  Vec rsum = Vec::Zero(prob.m), csum = Vec::Zero(prob.n);
  for (Index j = 0; j < A.outerSize(); ++j)
    for (SpMat::InnerIterator e(A, j); e; ++e) {
      const double a = std::abs(e.value());
      rsum[e.row()] += std::pow(a, 2.0 - alpha);
      csum[e.col()] += std::pow(a, alpha);
    }
  ScalingInfo info;
  info.row = Vec(prob.m);
  info.col = Vec(prob.n);
  for (Index i = 0; i < prob.m; ++i)
    info.row[i] = rsum[i] > 0.0 ? 1.0 / std::sqrt(rsum[i]) : 1.0;
  for (Index j = 0; j < prob.n; ++j)
    info.col[j] = csum[j] > 0.0 ? 1.0 / std::sqrt(csum[j]) : 1.0;
  info.applied = true;
  return {apply_scaling(prob, info), info};
}

UnscaledIterate unscale_solution(const ScalingInfo& info, const Vec& x,
                                 const Vec& y, const Vec& z, const Vec& w,
                                 const Vec& qw) {
  if (x.size() != info.col.size() || y.size() != info.row.size())
    throw DimensionError("unscale_solution: iterate does not match scaling");
  UnscaledIterate out;
  out.x = x.cwiseProduct(info.col);
  out.y = y.cwiseProduct(info.row);
  out.z = z.cwiseQuotient(info.col);
  out.w = w.cwiseProduct(info.col);
  out.qw = qw.cwiseQuotient(info.col);
  return out;
}

}  // namespace hprqp
