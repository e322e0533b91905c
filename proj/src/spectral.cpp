#include "hprqp/spectral.hpp"

#include <cmath>

#include "hprqp/rng.hpp"

namespace hprqp {

double power_method(const std::function<void(const Vec&, Vec&)>& op, Index d,
                    double tol, int max_iter, std::uint64_t seed,
                    int* iters_out) {
  if (iters_out) *iters_out = 0;
  if (d <= 0) return 0.0;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  Vec v(d);
  for (Index i = 0; i < d; ++i) v[i] = rng.normal();
  Vec mv(d);
  op(v, mv);
  if (mv.norm() < 1e-30) return 0.0;
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    const double nrm = mv.norm();
    if (nrm < 1e-30) return 0.0;
    v = mv / nrm;
    op(v, mv);
    const double rayleigh = v.dot(mv);
    if (iters_out) *iters_out = it + 1;
    if (it > 0 && std::abs(rayleigh - lambda) < tol * std::max(std::abs(rayleigh), 1e-30)) {
      lambda = rayleigh;
      break;
    }
    lambda = rayleigh;
  }
  return std::max(lambda, 0.0);
}

SpectralEstimates estimate(const CcqpProblem& prob, double safety,
                           std::uint64_t seed) {
  SpectralEstimates est;
  if (prob.m > 0) {
    Vec tmp(prob.n);
    auto aat = [&](const Vec& v, Vec& out) {
      tmp.noalias() = prob.A.transpose() * v;
      out.noalias() = prob.A * tmp;
    };
    est.lambda_A = safety * power_method(aat, prob.m, 1e-4, 5000, seed,
                                         &est.iterations_A);
  }
  if (!prob.Q.is_zero()) {
    auto qop = [&](const Vec& v, Vec& out) { prob.Q.apply(v, out); };
    est.lambda_Q = safety * power_method(qop, prob.n, 1e-4, 5000, seed + 1,
                                         &est.iterations_Q);
  }
  return est;
}

}  // namespace hprqp
