#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "smoothcrf/inference.hpp"
#include "smoothcrf/loss.hpp"
#include "smoothcrf/model.hpp"

namespace smoothcrf {

struct TrainConfig {
  double epsilon = 0.1;
  int outer_iters = 20;
  /// Sweeps after each of the unary and pairwise updates.
  int mp_iters = 25;
  /// Sweeps from zero messages at prediction time.
  int test_mp_iters = 200;
  double agreement_tol = 1e-6;
  OracleKind unary = OracleKind::Linear;
  OracleKind pairwise = OracleKind::Linear;
  FitConfig unary_fit;
  FitConfig pairwise_fit;
  std::uint64_t seed = 0;
  bool track_train_error = true;
  bool track_test_error = true;

  /// Defaults with the MLP step size lowered to 0.05 for pairwise factors.
  static TrainConfig defaults();
  SmoothingConfig train_inference() const;
  SmoothingConfig test_inference() const;
};

/// Errors are NaN when not tracked.
struct CurvePoint {
  int iteration = 0;
  double train_error = 0.0;
  double test_error = 0.0;
};

/// Per-example inference state carried across outer iterations.
struct ExampleState {
  LossTables loss;
  ScoreTables scores;
  Potentials theta;
  Messages lambda;
};

/// b_alpha(y) = (Delta_alpha(y) + sum_{beta < alpha} lambda_alpha(y_beta)
///               - sum_{gamma > alpha} lambda_gamma(y)) / eps.
BiasTables compute_biases(const RegionGraph& g, const Messages& lambda, const LossTables& loss, double eps);

enum class FactorKind { Unary, Pairwise };

/// One row per (example, region of the given kind) with the region's local
/// features, gold configuration and current bias vector. Rows are
/// example-major, regions in graph order.
BiasedLogRegProblem assemble_tied_problem(const Dataset& data, const std::vector<ExampleState>& states,
                                          FactorKind kind, double eps);

/// Alternates oracle fits with message passing on the loss-augmented
/// potentials of every training example.
class Trainer {
 public:
  Trainer(const Dataset& train, TrainConfig config);

  /// Bias computation, unary oracle fit and potential refresh (no message passing).
  void update_unary();
  void update_pairwise();
  /// config.mp_iters sweeps on every example.
  void pass_messages();
  /// update_unary, pass_messages, update_pairwise, pass_messages.
  void iterate();

  /// sum_k [ -F(x^k, y^k) + A(lambda^k, theta^k) ].
  double joint_objective() const;

  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const std::vector<ExampleState>& states() const { return states_; }
  int iteration() const { return iteration_; }
  /// Recompute scores and potentials of every example from the current model.
  void refresh_potentials();

 private:
  void update(FactorKind kind);

  const Dataset& data_;
  TrainConfig config_;
  Model model_;
  std::vector<ExampleState> states_;
  int iteration_ = 0;
};

struct TrainResult {
  Model model;
  std::vector<CurvePoint> curve;
};

using CurveCallback = std::function<void(const CurvePoint&)>;

/// Runs config.outer_iters outer iterations and records an error curve
/// (iteration 0 is the zero model).
TrainResult train(const Dataset& train, const Dataset& test, const TrainConfig& config,
                  const CurveCallback& on_iteration = {});

/// Inference with theta = eps * g (no loss term) from zero messages, then
/// node-marginal decoding.
Labeling predict(const Model& model, const Example& example, const SmoothingConfig& config);

double univariate_error(const Labeling& predicted, const Labeling& gold);
/// Fraction of mislabeled variables pooled over the whole dataset.
double dataset_error(const Model& model, const Dataset& data, const SmoothingConfig& config,
                     std::vector<Labeling>* predictions = nullptr);

/// sum_k smoothed_loss over the dataset.
double empirical_risk(const Dataset& data, const Model& model, const SmoothingConfig& budget);

}  // namespace smoothcrf
