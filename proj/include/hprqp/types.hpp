#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace hprqp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;
using Triplet = Eigen::Triplet<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Status { Optimal, TimeLimit, IterLimit };

std::string to_string(Status s);
Status status_from_string(const std::string& s);

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(what) {}
};

/// Parse failure with the 1-based line number of the offending input.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// A nonfinite value showed up in the named iterate block.
class NumericalBreakdown : public Error {
 public:
  explicit NumericalBreakdown(const std::string& block)
      : Error("numerical breakdown in block '" + block + "'"), block_(block) {}
  const std::string& block() const { return block_; }

 private:
  std::string block_;
};

}  // namespace hprqp
