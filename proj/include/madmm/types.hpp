#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace madmm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Extended-real +infinity. Sums involving it stay infinite.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class ErrorKind {
  dimension_mismatch,
  materialize_cap,
  invalid_argument,
  configuration,
  conditions_failed,
  usage,
  schema,
  io,
  no_feasible_probe,
};

const char* to_string(ErrorKind kind);

/// All library failures surface as this exception; `kind()` lets callers
/// (the CLI in particular) map them onto stable exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

void require_dim(Index got, Index want, const char* what);

}  // namespace madmm
