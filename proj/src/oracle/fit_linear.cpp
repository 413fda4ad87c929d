#include "lbfgs.hpp"
#include "smoothcrf/oracle.hpp"

namespace smoothcrf {

Classifier fit_constant(const BiasedLogRegProblem& problem, const FitConfig&) {
  problem.validate();
  const int L = problem.num_labels();
  const Eigen::Index K = problem.num_rows();
  // One pass gives value, gradient and Hessian of the concave objective in c.
  Vector p(L);
  auto evaluate = [&](const Vector& c, Vector* grad, Matrix* hess) {
    if (grad) grad->setZero(L);
    if (hess) hess->setZero(L, L);
    double value = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      p = c + problem.bias.col(k);
      const double m = p.maxCoeff();
      p = (p.array() - m).exp().matrix();
      const double z = p.sum();
      const auto g = problem.gold[static_cast<std::size_t>(k)];
      value += c[g] + problem.bias(g, k) - m - std::log(z);
      if (!grad) continue;
      p /= z;
      *grad -= p;
      (*grad)[g] += 1.0;
      hess->diagonal() += p;
      hess->noalias() -= p * p.transpose();
    }
    return value;
  };
  // Damped Newton. The Hessian is singular along the all-ones direction,
  // which the gradient never points along, so that direction is pinned.
  Vector c = Vector::Zero(L), grad;
  Matrix hess;
  double value = evaluate(c, &grad, &hess);
  const Matrix ones = Matrix::Ones(L, L);
  for (int it = 0; it < 100 && grad.lpNorm<Eigen::Infinity>() > 1e-12 * std::max<double>(1.0, K); ++it) {
    const Vector step = (hess + ones).ldlt().solve(grad);
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40 && !moved; ++ls, t *= 0.5) {
      const Vector trial = c + t * step;
      const double v = evaluate(trial, nullptr, nullptr);
      if (v > value) {
        c = trial;
        moved = true;
      }
    }
    if (!moved) break;
    value = evaluate(c, &grad, &hess);
  }
  c.array() -= c.mean();
  return Classifier::constant(std::move(c), static_cast<int>(problem.dim()));
}

Classifier fit_linear(const BiasedLogRegProblem& problem, const FitConfig& config, const Classifier* warm) {
  problem.validate();
  const int L = problem.num_labels();
  const Eigen::Index d = problem.dim();
  require(d >= 1, "linear classifier needs at least one feature");

  auto fn = [&](const Vector& w, Vector& grad) {
    const Eigen::Map<const Matrix> W(w.data(), L, d);
    Matrix r;
    const double value = logistic_terms(W * problem.features, problem, r);
    const Matrix g = r * problem.features.transpose();
    grad = -Eigen::Map<const Vector>(g.data(), g.size());
    return -value;
  };

  Vector start = Vector::Zero(L * d);
  if (warm && config.warm_start) {
    if (const auto* lin = std::get_if<LinearModel>(&warm->model());
        lin && lin->weights.rows() == L && lin->weights.cols() == d) {
      Vector candidate = Eigen::Map<const Vector>(lin->weights.data(), L * d);
      Vector scratch;
      // Never start below the zero classifier.
      if (fn(candidate, scratch) <= fn(start, scratch)) start = std::move(candidate);
    }
  }
  auto result = detail::lbfgs_minimize(fn, std::move(start), config.linear.max_iters, config.linear.history,
                                       config.linear.grad_tol);
  return Classifier::linear(Eigen::Map<const Matrix>(result.x.data(), L, d));
}

}  // namespace smoothcrf
