#include "hprqp/problem.hpp"

#include <algorithm>
#include <cmath>

namespace hprqp {

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::TimeLimit: return "TimeLimit";
    case Status::IterLimit: return "IterLimit";
  }
  return "Unknown";
}

Status status_from_string(const std::string& s) {
  if (s == "Optimal") return Status::Optimal;
  if (s == "TimeLimit") return Status::TimeLimit;
  if (s == "IterLimit") return Status::IterLimit;
  throw Error("unknown status string: " + s);
}

Box::Box(Vec l, Vec u) : lower(std::move(l)), upper(std::move(u)) {
  if (lower.size() != upper.size())
    throw DimensionError("box bounds have mismatched lengths");
  for (Index i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i])
      throw Error("box requires lower <= upper at index " + std::to_string(i));
  }
}

void Box::project(const Vec& v, Vec& out) const {
  if (v.size() != dim()) throw DimensionError("box projection: wrong length");
  out.resize(dim());
  for (Index i = 0; i < dim(); ++i)
    out[i] = std::min(std::max(v[i], lower[i]), upper[i]);
}

Vec Box::project(const Vec& v) const {
  Vec out;
  project(v, out);
  return out;
}

bool Box::contains(const Vec& v, double rtol) const {
  if (v.size() != dim()) return false;
  for (Index i = 0; i < dim(); ++i) {
    const double slack_l = rtol * std::max(1.0, std::abs(lower[i]));
    const double slack_u = rtol * std::max(1.0, std::abs(upper[i]));
    if (std::isfinite(lower[i]) && v[i] < lower[i] - slack_l) return false;
    if (std::isfinite(upper[i]) && v[i] > upper[i] + slack_u) return false;
  }
  return true;
}

Vec Box::finite_bound_magnitudes() const {
  Vec b(dim());
  for (Index i = 0; i < dim(); ++i) {
    const double al = std::isfinite(lower[i]) ? std::abs(lower[i]) : 0.0;
    const double au = std::isfinite(upper[i]) ? std::abs(upper[i]) : 0.0;
    b[i] = std::max(al, au);
  }
  return b;
}

double support_box(const Box& box, const Vec& y) {
  if (y.size() != box.dim()) throw DimensionError("support_box: wrong length");
  double s = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    // 0 * inf is defined as 0 here.
    if (y[i] > 0.0) {
      if (!std::isfinite(box.upper[i])) return kInf;
      s += box.upper[i] * y[i];
    } else if (y[i] < 0.0) {
      if (!std::isfinite(box.lower[i])) return kInf;
      s += box.lower[i] * y[i];
    }
  }
  return s;
}

CompositeTerm CompositeTerm::box_indicator(Vec lower, Vec upper) {
  CompositeTerm t;
  t.kind_ = Kind::BoxIndicator;
  t.box_ = Box(std::move(lower), std::move(upper));
  t.n_ = t.box_.dim();
  return t;
}

CompositeTerm CompositeTerm::weighted_l1(double lambda, Index n) {
  if (!(lambda > 0.0)) throw Error("weighted l1 requires lambda > 0");
  CompositeTerm t;
  t.kind_ = Kind::WeightedL1;
  t.lambda_ = lambda;
  t.n_ = n;
  return t;
}

const Box& CompositeTerm::box() const {
  if (kind_ != Kind::BoxIndicator) throw Error("composite term is not a box");
  return box_;
}

double CompositeTerm::lambda() const {
  if (kind_ != Kind::WeightedL1) throw Error("composite term is not weighted l1");
  return lambda_;
}

double CompositeTerm::value(const Vec& x) const {
  if (x.size() != dim()) throw DimensionError("phi value: wrong length");
  if (kind_ == Kind::BoxIndicator)
    return box_.contains(x, 1e-12) ? 0.0 : kInf;
  return lambda_ * x.lpNorm<1>();
}

double CompositeTerm::conjugate(const Vec& v) const {
  if (v.size() != dim()) throw DimensionError("phi conjugate: wrong length");
  if (kind_ == Kind::BoxIndicator) return support_box(box_, v);
  const double slack = lambda_ * (1.0 + 1e-10);
  return v.lpNorm<Eigen::Infinity>() <= slack ? 0.0 : kInf;
}

void prox_phi(const CompositeTerm& t, double sigma, const Vec& r, Vec& out) {
  if (!(sigma > 0.0)) throw Error("prox_phi requires sigma > 0");
  if (r.size() != t.dim()) throw DimensionError("prox_phi: wrong length");
  out.resize(r.size());
  if (t.kind() == CompositeTerm::Kind::BoxIndicator) {
    t.box().project(r, out);
    return;
  }
  const double thr = sigma * t.lambda();
  for (Index i = 0; i < r.size(); ++i) {
    const double a = std::abs(r[i]) - thr;
    out[i] = a > 0.0 ? std::copysign(a, r[i]) : 0.0;
  }
}

Vec prox_phi(const CompositeTerm& t, double sigma, const Vec& r) {
  Vec out;
  prox_phi(t, sigma, r, out);
  return out;
}

double conj_phi(const CompositeTerm& t, const Vec& v) { return t.conjugate(v); }

PsdOperator PsdOperator::explicit_sparse(SpMat q) {
  if (q.rows() != q.cols()) throw DimensionError("Q must be square");
  PsdOperator op;
  op.n_ = q.rows();
  q.makeCompressed();
  op.mat_ = std::make_shared<const SpMat>(std::move(q));
  return op;
}

PsdOperator PsdOperator::matrix_free(Index n, ApplyFn apply, std::string tag) {
  PsdOperator op;
  op.n_ = n;
  op.fn_ = std::move(apply);
  op.tag_ = std::move(tag);
  return op;
}

PsdOperator PsdOperator::zero(Index n) {
  return explicit_sparse(SpMat(n, n));
}

const SpMat& PsdOperator::matrix() const {
  if (!is_explicit()) throw Error("matrix-free Q has no explicit matrix");
  return *mat_;
}

void PsdOperator::apply(const Vec& v, Vec& out) const {
  if (v.size() != n_)
    throw DimensionError("apply_Q: vector length " + std::to_string(v.size()) +
                         " vs operator dim " + std::to_string(n_));
  if (is_explicit()) {
    out = (*mat_) * v;
  } else {
    fn_(v, out);
    if (out.size() != n_) throw DimensionError("matrix-free Q returned wrong length");
  }
}

Vec PsdOperator::apply(const Vec& v) const {
  Vec out;
  apply(v, out);
  return out;
}

double CcqpProblem::primal_objective_core(const Vec& x, const Vec& qx) const {
  return 0.5 * x.dot(qx) + c.dot(x);
}

void CcqpProblem::validate() const {
  if (Q.dim() != n) throw DimensionError("Q dimension differs from n");
  if (A.rows() != m || A.cols() != n) throw DimensionError("A must be m x n");
  if (c.size() != n) throw DimensionError("c must have length n");
  if (K.dim() != m) throw DimensionError("K must have dimension m");
  if (phi.dim() != n) throw DimensionError("phi must have dimension n");
}

CcqpProblem make_ccqp(PsdOperator q, SpMat a, Vec c, Box k, CompositeTerm phi,
                      std::string name, double obj_const) {
  CcqpProblem p;
  p.n = q.dim();
  p.m = a.rows();
  p.Q = std::move(q);
  p.A = std::move(a);
  p.A.makeCompressed();
  p.c = std::move(c);
  p.K = std::move(k);
  p.phi = std::move(phi);
  p.name = std::move(name);
  p.obj_const = obj_const;
  p.validate();
  return p;
}

}  // namespace hprqp
