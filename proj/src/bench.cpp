#include "hprqp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace hprqp {

double sgm(const std::vector<double>& values, double shift) {
  if (values.empty()) throw Error("sgm: need at least one value");
  double acc = 0.0;
  for (double v : values) {
    if (v + shift <= 0.0) throw Error("sgm: value + shift must be positive");
    acc += std::log(v + shift);
  }
  return std::exp(acc / static_cast<double>(values.size())) - shift;
}

double sgm_time(const std::vector<BenchRecord>& records, double shift) {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(r.seconds);
  return sgm(v, shift);
}

double sgm_iterations(const std::vector<BenchRecord>& records, double shift) {
  std::vector<double> v;
  v.reserve(records.size());
  for (const auto& r : records) v.push_back(static_cast<double>(r.iterations));
  return sgm(v, shift);
}

std::vector<double> default_tau_grid(double time_limit, int points) {
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  const double lo = std::log10(1.0);
  const double hi = std::log10(std::max(time_limit, 1.0 + 1e-9));
  for (int i = 0; i < points; ++i) {
    const double t = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    grid.push_back(std::pow(10.0, t));
  }
  return grid;
}

PerfProfile perf_profile(
    const std::map<std::string, std::vector<BenchRecord>>& by_solver,
    const std::vector<double>& tau_grid) {
  if (by_solver.empty()) throw Error("perf_profile: no solvers");
  std::set<std::string> ref;
  for (const auto& r : by_solver.begin()->second) ref.insert(r.instance);
  for (const auto& [solver, recs] : by_solver) {
    std::set<std::string> cur;
    for (const auto& r : recs) cur.insert(r.instance);
    if (cur != ref) {
      std::ostringstream msg;
      msg << "perf_profile: instance sets differ for solver '" << solver << "';";
      for (const auto& s : ref)
        if (!cur.count(s)) msg << " missing " << s;
      for (const auto& s : cur)
        if (!ref.count(s)) msg << " extra " << s;
      throw Error(msg.str());
    }
  }

  PerfProfile p;
  p.tau = tau_grid;
  for (const auto& [solver, recs] : by_solver) {
    p.solvers.push_back(solver);
    std::vector<double> f;
    f.reserve(tau_grid.size());
    const double n = static_cast<double>(recs.size());
    for (double tau : tau_grid) {
      int hit = 0;
      for (const auto& r : recs)
        if (r.solved() && r.seconds <= tau) ++hit;
      f.push_back(n > 0 ? hit / n : 0.0);
    }
    p.fractions.push_back(std::move(f));
  }
  return p;
}

std::string perf_profile_csv(const PerfProfile& p) {
  std::ostringstream out;
  out << "tau";
  for (const auto& s : p.solvers) out << ',' << s;
  out << '\n';
  for (std::size_t i = 0; i < p.tau.size(); ++i) {
    out << p.tau[i];
    for (std::size_t s = 0; s < p.solvers.size(); ++s)
      out << ',' << p.fractions[s][i];
    out << '\n';
  }
  return out.str();
}

std::string records_csv(const std::vector<BenchRecord>& records,
                        const std::string& solver) {
  std::ostringstream out;
  out << "instance,solver,status,iterations,seconds,tol\n";
  for (const auto& r : records)
    out << r.instance << ',' << solver << ',' << to_string(r.status) << ','
        << r.iterations << ',' << r.seconds << ',' << r.tol << '\n';
  return out.str();
}

}  // namespace hprqp
