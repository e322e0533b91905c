#pragma once

#include <map>
#include <string>
#include <vector>

#include "hprqp/types.hpp"

namespace hprqp {

struct BenchRecord {
  std::string instance;
  Status status = Status::IterLimit;
  std::int64_t iterations = 0;
  double seconds = 0.0;  // time limit for unsolved records
  double tol = 0.0;

  bool solved() const { return status == Status::Optimal; }
};

/// Shifted geometric mean (prod (t_i + shift))^(1/n) - shift, computed in
/// log space.
double sgm(const std::vector<double>& values, double shift = 10.0);
double sgm_time(const std::vector<BenchRecord>& records, double shift = 10.0);
double sgm_iterations(const std::vector<BenchRecord>& records,
                      double shift = 10.0);

/// Fraction of instances each solver finishes within tau, for every tau in
/// the grid. All solvers must cover the same instance set.
struct PerfProfile {
  std::vector<double> tau;                       // grid
  std::vector<std::string> solvers;              // column order
  std::vector<std::vector<double>> fractions;    // [solver][tau]
};

PerfProfile perf_profile(
    const std::map<std::string, std::vector<BenchRecord>>& by_solver,
    const std::vector<double>& tau_grid);

/// Log-spaced default grid from 1 to the time limit (200 points).
std::vector<double> default_tau_grid(double time_limit, int points = 200);

std::string perf_profile_csv(const PerfProfile& p);
std::string records_csv(const std::vector<BenchRecord>& records,
                        const std::string& solver);

}  // namespace hprqp
