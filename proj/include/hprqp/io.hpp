#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hprqp/engine.hpp"
#include "hprqp/problem.hpp"

namespace hprqp {

/// Raw contents of a QPS/MPS file in free (whitespace-delimited) format.
struct QpsDocument {
  std::string name;
  std::vector<std::pair<char, std::string>> rows;  // type in {N,E,L,G}
  std::string objective_row;
  std::map<std::string, Index> row_index;   // constraint rows only
  std::map<std::string, Index> col_index;
  std::vector<Triplet> entries;             // constraint coefficients
  Vec c;                                    // objective row coefficients
  double obj_rhs = 0.0;
  std::vector<char> row_type;               // per constraint row
  Vec rhs;
  std::vector<bool> has_range;
  Vec range;
  Vec col_lower, col_upper;
  std::vector<Triplet> quad;                // full symmetric Q entries
  bool has_quad = false;

  CcqpProblem to_problem() const;
};

QpsDocument parse_qps(const std::string& text);

/// Parses a QPS/MPS file (free format) into a problem. E rows become
/// equalities, L rows (-inf, rhs], G rows [rhs, +inf); RANGES follow the MPS
/// convention and variable bounds default to [0, +inf). QUADOBJ entries are
/// the lower triangle of Q in the 1/2 x^T Q x convention.
CcqpProblem read_qps(const std::string& text);
CcqpProblem read_qps_file(const std::filesystem::path& path);

/// Reads a directory bundle: A.mtx (required, Matrix Market coordinate),
/// Q.mtx (optional symmetric; absent means Q = 0), c.vec, K.bounds,
/// X.bounds or meta.json declaring a weighted-l1 composite term.
CcqpProblem read_matrix_bundle(const std::filesystem::path& dir);

/// Writes the bundle format above; numbers are written with shortest
/// round-trip precision so read-back is bit-identical.
void write_matrix_bundle(const CcqpProblem& prob,
                         const std::filesystem::path& dir);

/// JSON result (schema_version 1) plus a CSV trace with columns
/// k,r,t,sigma,R_tilde,eta_gap,eta_p,eta_d,seconds.
void write_results(const KktReport& report,
                   const std::vector<TraceRecord>& trace,
                   const std::filesystem::path& prefix);

std::string results_json(const KktReport& report);
std::string trace_csv(const std::vector<TraceRecord>& trace);

SpMat read_matrix_market(const std::filesystem::path& path);
void write_matrix_market(const SpMat& a, const std::filesystem::path& path,
                         bool symmetric = false);

}  // namespace hprqp
