#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace grp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid user input: bad sizes, violated invariants, malformed config.
/// The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// An iterative routine failed to converge or hit a degenerate case.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

}  // namespace grp
