#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "smoothcrf/oracle.hpp"

namespace smoothcrf {
namespace {

constexpr std::array<std::string_view, 5> kNames = {"zero", "const", "linear", "boost", "mlp"};

Matrix sigmoid(const Matrix& a) { return (1.0 / (1.0 + (-a.array()).exp())).matrix(); }

}  // namespace

std::string_view kind_name(OracleKind kind) { return kNames[static_cast<std::size_t>(kind)]; }

std::optional<OracleKind> parse_kind(std::string_view name) {
  for (std::size_t k = 0; k < kNames.size(); ++k)
    if (kNames[k] == name) return static_cast<OracleKind>(k);
  return std::nullopt;
}

void BiasedLogRegProblem::validate() const {
  require(bias.cols() == features.cols(), "bias and feature row counts differ");
  require(static_cast<Eigen::Index>(gold.size()) == features.cols(), "gold label count differs from rows");
  require(bias.rows() >= 2, "need at least two labels");
  require(bias.allFinite(), "biases must be finite");
  for (int y : gold) require(y >= 0 && y < bias.rows(), "gold label out of range");
}

int RegressionTree::leaf_of(const double* x) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const Node& node = nodes[static_cast<std::size_t>(n)];
    n = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return n;
}

Classifier Classifier::zero(int num_labels, int dim) { return Classifier(num_labels, dim, std::monostate{}); }

Classifier Classifier::constant(Vector offsets, int dim) {
  const int L = static_cast<int>(offsets.size());
  return Classifier(L, dim, ConstantModel{std::move(offsets)});
}

Classifier Classifier::linear(Matrix weights) {
  const int L = static_cast<int>(weights.rows()), d = static_cast<int>(weights.cols());
  return Classifier(L, d, LinearModel{std::move(weights)});
}

Classifier Classifier::mlp(Matrix hidden, Matrix output) {
  require(output.cols() == hidden.rows(), "MLP layer shapes disagree");
  const int L = static_cast<int>(output.rows()), d = static_cast<int>(hidden.cols());
  return Classifier(L, d, MlpModel{std::move(hidden), std::move(output)});
}

Classifier Classifier::boosted(int num_labels, int dim, BoostedTrees trees) {
  for (const auto& t : trees.trees) require(t.label >= 0 && t.label < num_labels, "tree label out of range");
  return Classifier(num_labels, dim, std::move(trees));
}

OracleKind Classifier::kind() const {
  switch (model_.index()) {
    case 1: return OracleKind::Constant;
    case 2: return OracleKind::Linear;
    case 3: return OracleKind::Mlp;
    case 4: return OracleKind::Boost;
    default: return OracleKind::Zero;
  }
}

Vector Classifier::predict(const Eigen::Ref<const Vector>& x) const {
  require(x.size() == dim_, "feature dimension mismatch");
  Matrix X = x;
  return predict_batch(X).col(0);
}

Matrix Classifier::predict_batch(const Matrix& X) const {
  require(X.rows() == dim_, "feature dimension mismatch: expected " + std::to_string(dim_) + ", got " +
                                std::to_string(X.rows()));
  const Eigen::Index K = X.cols();
  return std::visit(
      [&](const auto& m) -> Matrix {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return Matrix::Zero(num_labels_, K);
        } else if constexpr (std::is_same_v<T, ConstantModel>) {
          return m.offsets.replicate(1, K);
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          return m.weights * X;
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          return m.output * sigmoid(m.hidden * X);
        } else {
          Matrix out = Matrix::Zero(num_labels_, K);
          for (Eigen::Index k = 0; k < K; ++k) {
            const double* x = X.col(k).data();
            for (const auto& tree : m.trees) out(tree.label, k) += tree.evaluate(x);
          }
          return out;
        }
      },
      model_);
}

namespace {

// Shared column loop; residuals are written only when out is non-null.
double logistic_pass(const Matrix& scores, const BiasedLogRegProblem& problem, double* out) {
  require(scores.rows() == problem.bias.rows() && scores.cols() == problem.bias.cols(),
          "score matrix shape does not match problem");
  const Eigen::Index L = scores.rows(), K = scores.cols();
  std::vector<double> t(static_cast<std::size_t>(L));
  double total = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    const double* s = scores.data() + k * L;
    const double* b = problem.bias.data() + k * L;
    double m = s[0] + b[0];
    for (Eigen::Index y = 0; y < L; ++y) {
      t[static_cast<std::size_t>(y)] = s[y] + b[y];
      m = std::max(m, t[static_cast<std::size_t>(y)]);
    }
    double z = 0.0;
    for (Eigen::Index y = 0; y < L; ++y) {
      auto& v = t[static_cast<std::size_t>(y)];
      v = std::exp(v - m);
      z += v;
    }
    const auto g = problem.gold[static_cast<std::size_t>(k)];
    total += s[g] + b[g] - m - std::log(z);
    if (out) {
      double* r = out + k * L;
      for (Eigen::Index y = 0; y < L; ++y) r[y] = -t[static_cast<std::size_t>(y)] / z;
      r[g] += 1.0;
    }
  }
  return total;
}

}  // namespace

double logistic_objective(const Matrix& scores, const BiasedLogRegProblem& problem) {
  return logistic_pass(scores, problem, nullptr);
}

double logistic_objective(const Classifier& f, const BiasedLogRegProblem& problem) {
  return logistic_objective(f.predict_batch(problem.features), problem);
}

double logistic_terms(const Matrix& scores, const BiasedLogRegProblem& problem, Matrix& residuals) {
  residuals.resize(scores.rows(), scores.cols());
  return logistic_pass(scores, problem, residuals.data());
}

Matrix score_residuals(const Matrix& scores, const BiasedLogRegProblem& problem) {
  Matrix r;
  logistic_terms(scores, problem, r);
  return r;
}

Matrix logistic_gradient(const LinearModel& model, const BiasedLogRegProblem& problem) {
  const Matrix r = score_residuals(model.weights * problem.features, problem);
  return r * problem.features.transpose();
}

MlpGradient logistic_gradient(const MlpModel& model, const BiasedLogRegProblem& problem) {
  const Matrix h = sigmoid(model.hidden * problem.features);
  const Matrix r = score_residuals(model.output * h, problem);
  MlpGradient grad;
  grad.output = r * h.transpose();
  const Matrix back = ((model.output.transpose() * r).array() * h.array() * (1.0 - h.array())).matrix();
  grad.hidden = back * problem.features.transpose();
  return grad;
}

Classifier fit_zero(const BiasedLogRegProblem& problem) {
  return Classifier::zero(problem.num_labels(), static_cast<int>(problem.dim()));
}

Classifier fit(OracleKind kind, const BiasedLogRegProblem& problem, const FitConfig& config,
               const Classifier* warm) {
  if (warm && (!config.warm_start || warm->kind() != kind)) warm = nullptr;
  switch (kind) {
    case OracleKind::Zero: return fit_zero(problem);
    case OracleKind::Constant: return fit_constant(problem, config);
    case OracleKind::Linear: return fit_linear(problem, config, warm);
    case OracleKind::Mlp: return fit_mlp(problem, config, warm);
    case OracleKind::Boost: return fit_gbt(problem, config, warm);
  }
  return fit_zero(problem);
}

}  // namespace smoothcrf
