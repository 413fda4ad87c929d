#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace smoothcrf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Labeling = std::vector<int>;

class RegionGraph;

// Thrown for malformed files; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& message, long line = 0, const std::string& source = "")
      : std::runtime_error(compose(message, line, source)), message_(message), line_(line) {}
  long line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  static std::string compose(const std::string& message, long line, const std::string& source) {
    std::string where = source;
    if (line > 0) where += (where.empty() ? "line " : ":") + std::to_string(line);
    return where.empty() ? message : where + ": " + message;
  }
  std::string message_;
  long line_;
};

/// Numerically stable log(sum(exp(x))) over any dense Eigen expression.
template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() == 0) return -std::numeric_limits<Scalar>::infinity();
  const Scalar m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.derived().array() - m).exp().sum());
}

/// rho * log(sum(exp(x / rho))): the convex conjugate of the scaled negative
/// entropy on the simplex.
template <typename Derived>
typename Derived::Scalar smoothed_max(const Eigen::DenseBase<Derived>& x,
                                      typename Derived::Scalar rho) {
  return rho * log_sum_exp(x.derived() / rho);
}

/// Softmax of x written into out; out may alias a temporary of the same size.
template <typename Derived, typename Out>
void softmax(const Eigen::MatrixBase<Derived>& x, Eigen::MatrixBase<Out>& out) {
  const auto m = x.maxCoeff();
  out = (x.array() - m).exp().matrix();
  out /= out.sum();
}

inline void require(bool cond, const std::string& message) {
  if (!cond) throw std::invalid_argument(message);
}

}  // namespace smoothcrf
