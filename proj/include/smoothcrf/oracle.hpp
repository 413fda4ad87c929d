#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "smoothcrf/types.hpp"

namespace smoothcrf {

enum class OracleKind { Zero, Constant, Linear, Boost, Mlp };

/// zero, const, linear, boost, mlp.
std::string_view kind_name(OracleKind kind);
std::optional<OracleKind> parse_kind(std::string_view name);
inline constexpr OracleKind kAllKinds[] = {OracleKind::Zero, OracleKind::Constant, OracleKind::Linear,
                                           OracleKind::Boost, OracleKind::Mlp};

/// Multi-class logistic regression where every row carries a fixed additive
/// bias vector:
///   max_f sum_k [ f(x_k, y_k) + b_k(y_k) - log sum_y exp(f(x_k, y) + b_k(y)) ].
struct BiasedLogRegProblem {
  Matrix features;  // d x K, one column per row
  std::vector<int> gold;
  Matrix bias;  // L x K

  Eigen::Index num_rows() const { return features.cols(); }
  Eigen::Index dim() const { return features.rows(); }
  int num_labels() const { return static_cast<int>(bias.rows()); }
  void validate() const;
};

struct ConstantModel {
  Vector offsets;  // zero mean
};

struct LinearModel {
  Matrix weights;  // L x d
};

/// f(x) = W sigmoid(U x).
struct MlpModel {
  Matrix hidden;  // h x d
  Matrix output;  // L x h
};

/// Axis-aligned regression tree stored in preorder. A node with feature < 0
/// is a leaf; otherwise rows with x[feature] <= threshold go left.
struct RegressionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  int label = 0;
  std::vector<Node> nodes;

  double evaluate(const double* x) const {
    int n = 0;
    while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
      const Node& node = nodes[static_cast<std::size_t>(n)];
      n = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(n)].value;
  }
  /// Leaf reached by x.
  int leaf_of(const double* x) const;
};

/// One tree per label per round; leaf values already include shrinkage.
struct BoostedTrees {
  int rounds = 0;
  std::vector<RegressionTree> trees;
};

/// A fitted scoring function f(x, .) returning one score per label.
class Classifier {
 public:
  using Model = std::variant<std::monostate, ConstantModel, LinearModel, MlpModel, BoostedTrees>;

  Classifier() = default;
  static Classifier zero(int num_labels, int dim);
  static Classifier constant(Vector offsets, int dim);
  static Classifier linear(Matrix weights);
  static Classifier mlp(Matrix hidden, Matrix output);
  static Classifier boosted(int num_labels, int dim, BoostedTrees trees);

  OracleKind kind() const;
  int num_labels() const { return num_labels_; }
  int dim() const { return dim_; }
  const Model& model() const { return model_; }

  Vector predict(const Eigen::Ref<const Vector>& x) const;
  /// Scores for every column of X (d x K); returns L x K.
  Matrix predict_batch(const Matrix& X) const;

 private:
  Classifier(int num_labels, int dim, Model model)
      : num_labels_(num_labels), dim_(dim), model_(std::move(model)) {}
  int num_labels_ = 0;
  int dim_ = 0;
  Model model_;
};

struct LinearFitConfig {
  int max_iters = 50;
  int history = 10;
  double grad_tol = 1e-10;
};

struct MlpFitConfig {
  int hidden = 32;
  int epochs = 5;
  int batch_size = 1000;
  double learning_rate = 0.25;
  double momentum = 0.9;
  double gradient_weight = 0.1;
  /// The minibatch gradient is the batch mean times this.
  double gradient_scale = 100.0;
  double init_scale = 1.0;
};

struct BoostFitConfig {
  int rounds = 10;
  int max_depth = 4;
  double min_leaf_fraction = 0.05;
  double shrinkage = 0.25;
  double subsample = 0.5;
  int newton_steps = 3;
  double max_leaf_value = 20.0;
};

struct FitConfig {
  std::uint64_t seed = 0;
  bool warm_start = true;
  LinearFitConfig linear;
  MlpFitConfig mlp;
  BoostFitConfig boost;
};

/// Objective evaluated from a precomputed L x K score matrix.
double logistic_objective(const Matrix& scores, const BiasedLogRegProblem& problem);
double logistic_objective(const Classifier& f, const BiasedLogRegProblem& problem);

/// d objective / d scores = onehot(gold) - softmax(scores + bias), L x K.
Matrix score_residuals(const Matrix& scores, const BiasedLogRegProblem& problem);

/// Objective and residuals in one pass; residuals is resized to L x K.
double logistic_terms(const Matrix& scores, const BiasedLogRegProblem& problem, Matrix& residuals);

/// Gradient with respect to W (L x d).
Matrix logistic_gradient(const LinearModel& model, const BiasedLogRegProblem& problem);

struct MlpGradient {
  Matrix hidden;
  Matrix output;
};
MlpGradient logistic_gradient(const MlpModel& model, const BiasedLogRegProblem& problem);

Classifier fit_zero(const BiasedLogRegProblem& problem);
Classifier fit_constant(const BiasedLogRegProblem& problem, const FitConfig& config);
Classifier fit_linear(const BiasedLogRegProblem& problem, const FitConfig& config,
                      const Classifier* warm = nullptr);
Classifier fit_mlp(const BiasedLogRegProblem& problem, const FitConfig& config, const Classifier* warm = nullptr);
/// Per-round objective values (before the first round, then after each
/// accepted round) are appended to *trace when given.
Classifier fit_gbt(const BiasedLogRegProblem& problem, const FitConfig& config, const Classifier* warm = nullptr,
                   std::vector<double>* trace = nullptr);

/// Dispatch on kind. `warm` is ignored unless config.warm_start is set and its
/// kind matches.
Classifier fit(OracleKind kind, const BiasedLogRegProblem& problem, const FitConfig& config,
               const Classifier* warm = nullptr);

}  // namespace smoothcrf
