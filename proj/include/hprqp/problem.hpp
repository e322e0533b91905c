#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "hprqp/types.hpp"

namespace hprqp {

/// Box set { v : lower <= v <= upper }, entries may be +-inf.
struct Box {
  Vec lower;
  Vec upper;

  Box() = default;
  Box(Vec l, Vec u);

  Index dim() const { return lower.size(); }

  /// Componentwise clamp of v onto the box.
  Vec project(const Vec& v) const;
  void project(const Vec& v, Vec& out) const;

  /// Membership test with a small relative slack per component.
  bool contains(const Vec& v, double rtol = 1e-9) const;

  /// max(|lower|, |upper|) componentwise with infinite entries treated as zero.
  Vec finite_bound_magnitudes() const;
};

/// sup_{s in box} <s, y>. Returns +inf when an infinite bound meets a
/// coefficient of matching sign; the 0*inf case counts as 0.
double support_box(const Box& box, const Vec& y);

/// The composite term phi of the objective: either the indicator of a box on
/// the variables or a weighted l1 norm. A closed enumeration so that proximal
/// maps, conjugates and support values stay exact.
class CompositeTerm {
 public:
  enum class Kind { BoxIndicator, WeightedL1 };

  static CompositeTerm box_indicator(Vec lower, Vec upper);
  static CompositeTerm weighted_l1(double lambda, Index n);

  Kind kind() const { return kind_; }
  Index dim() const { return kind_ == Kind::BoxIndicator ? box_.dim() : n_; }
  const Box& box() const;
  double lambda() const;

  /// phi(x); +inf for a box violation beyond a relative slack.
  double value(const Vec& x) const;

  /// phi^*(v); for the l1 term 0 on the lambda-ball (with a hair of relative
  /// slack so prox outputs at the boundary stay feasible) and +inf outside.
  double conjugate(const Vec& v) const;

 private:
  CompositeTerm() = default;
  Kind kind_ = Kind::BoxIndicator;
  Box box_;
  double lambda_ = 0.0;
  Index n_ = 0;
};

/// argmin_z phi(z) + 1/(2 sigma) ||z - r||^2: clamp for the box indicator,
/// soft-thresholding at sigma*lambda for the weighted l1 term.
Vec prox_phi(const CompositeTerm& t, double sigma, const Vec& r);
void prox_phi(const CompositeTerm& t, double sigma, const Vec& r, Vec& out);

/// phi^*(v), see CompositeTerm::conjugate.
double conj_phi(const CompositeTerm& t, const Vec& v);

/// Self-adjoint PSD operator Q, either an explicit sparse matrix or a
/// matrix-free callback v -> Qv.
class PsdOperator {
 public:
  using ApplyFn = std::function<void(const Vec&, Vec&)>;

  static PsdOperator explicit_sparse(SpMat q);
  static PsdOperator matrix_free(Index n, ApplyFn apply, std::string tag = "");
  static PsdOperator zero(Index n);

  Index dim() const { return n_; }
  bool is_explicit() const { return static_cast<bool>(mat_); }
  bool is_zero() const { return is_explicit() && mat_->nonZeros() == 0; }
  const SpMat& matrix() const;
  const std::string& tag() const { return tag_; }
  std::size_t nnz() const { return is_explicit() ? static_cast<std::size_t>(mat_->nonZeros()) : 0; }

  void apply(const Vec& v, Vec& out) const;
  Vec apply(const Vec& v) const;

 private:
  PsdOperator() = default;
  Index n_ = 0;
  std::shared_ptr<const SpMat> mat_;  // shared so problems copy cheaply
  ApplyFn fn_;
  std::string tag_;
};

inline Vec apply_Q(const PsdOperator& q, const Vec& v) { return q.apply(v); }

/// Convex composite QP data:
///   min 1/2 <x, Qx> + <c, x> + phi(x)   s.t.  A x in K.
/// Immutable after construction; all solver modules treat it as read-only.
struct CcqpProblem {
  Index n = 0;  // variables
  Index m = 0;  // rows of A
  PsdOperator Q;
  SpMat A;  // m x n
  Vec c;
  Box K;  // dim m
  CompositeTerm phi;
  double obj_const = 0.0;  // additive constant reported with objectives
  std::string name;

  CcqpProblem() : phi(CompositeTerm::weighted_l1(1.0, 0)) {}

  double primal_objective_core(const Vec& x, const Vec& qx) const;

  /// Throws on inconsistent dimensions or invalid bounds.
  void validate() const;
};

CcqpProblem make_ccqp(PsdOperator q, SpMat a, Vec c, Box k, CompositeTerm phi,
                      std::string name = "", double obj_const = 0.0);

}  // namespace hprqp
