#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <stdexcept>

#include "smoothcrf/types.hpp"

namespace smoothcrf::detail {

struct LbfgsResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
};

/// Minimizes fn (value returned, gradient written to the second argument)
/// with limited-memory BFGS and a backtracking Armijo line search. Accepted
/// steps decrease the value, or leave it unchanged to rounding while
/// shrinking the gradient; the run ends when no step of either kind is found.
inline LbfgsResult lbfgs_minimize(const std::function<double(const Vector&, Vector&)>& fn, Vector x,
                                  int max_iters, int history, double grad_tol) {
  Vector g(x.size());
  double f = fn(x, g);
  if (!std::isfinite(f)) throw std::runtime_error("L-BFGS: non-finite objective at start point");
  std::deque<std::pair<Vector, Vector>> pairs;  // (s, y)
  LbfgsResult result;
  Vector x_new(x.size()), g_new(x.size());
  for (int it = 0; it < max_iters; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= grad_tol) break;

    // Two-loop recursion.
    Vector q = g;
    std::vector<double> alpha(pairs.size());
    for (std::size_t k = pairs.size(); k-- > 0;) {
      const auto& [s, y] = pairs[k];
      alpha[k] = s.dot(q) / y.dot(s);
      q -= alpha[k] * y;
    }
    double gamma = 1.0;
    if (!pairs.empty()) {
      const auto& [s, y] = pairs.back();
      gamma = s.dot(y) / y.squaredNorm();
    } else {
      gamma = 1.0 / std::max(1.0, g.norm());
    }
    Vector d = gamma * q;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& [s, y] = pairs[k];
      const double beta = y.dot(d) / y.dot(s);
      d += (alpha[k] - beta) * s;
    }
    d = -d;
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = -g;
      slope = -g.squaredNorm();
      pairs.clear();
    }

    double step = 1.0;
    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = x + step * d;
      f_new = fn(x_new, g_new);
      if (!std::isfinite(f_new)) {
        step *= 0.5;
        continue;
      }
      const bool armijo = f_new <= f + 1e-4 * step * slope && f_new < f;
      // Near the optimum value differences drown in rounding; the gradient
      // still tells whether the step made progress. Tiny steps that only
      // shuffle rounding noise are not worth their evaluations.
      const bool flat = step >= 1e-3 && f_new <= f + 1e-15 * std::abs(f) && g_new.norm() < g.norm();
      if (armijo || flat) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Vector s = x_new - x;
    Vector y = g_new - g;
    if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
      pairs.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(pairs.size()) > history) pairs.pop_front();
    }
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    result.iterations = it + 1;
  }
  result.x = std::move(x);
  result.value = f;
  return result;
}

}  // namespace smoothcrf::detail
