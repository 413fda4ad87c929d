#include "smoothcrf/trainer.hpp"

#include <limits>
#include <string>

#include "smoothcrf/parallel.hpp"
#include "smoothcrf/random.hpp"

namespace smoothcrf {

TrainConfig TrainConfig::defaults() {
  TrainConfig c;
  c.pairwise_fit.mlp.learning_rate = 0.05;
  return c;
}

SmoothingConfig TrainConfig::train_inference() const {
  SmoothingConfig s;
  s.epsilon = epsilon;
  s.max_iters = mp_iters;
  s.agreement_tol = agreement_tol;
  s.check_interval = 5;
  return s;
}

SmoothingConfig TrainConfig::test_inference() const {
  SmoothingConfig s = train_inference();
  s.max_iters = test_mp_iters;
  return s;
}

BiasTables compute_biases(const RegionGraph& g, const Messages& lambda, const LossTables& loss, double eps) {
  require(eps > 0.0, "epsilon must be positive");
  BiasTables b;
  b.values = loss.values;
  const int L = g.num_labels();
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const auto l0 = lambda.to(g, e, 0);
    const auto l1 = lambda.to(g, e, 1);
    auto table = b.region(g, g.edge_region(e));
    for (int a = 0; a < L; ++a)
      for (int c = 0; c < L; ++c) table[a * L + c] += l0[a] + l1[c];
    b.region(g, ed.first) -= l0;
    b.region(g, ed.second) -= l1;
  }
  b.values /= eps;
  return b;
}

BiasedLogRegProblem assemble_tied_problem(const Dataset& data, const std::vector<ExampleState>& states,
                                          FactorKind kind, double eps) {
  require(states.size() == data.examples.size(), "one state per example required");
  const bool unary = kind == FactorKind::Unary;
  const int L = unary ? data.num_labels : data.num_labels * data.num_labels;
  const int d = unary ? data.d_unary : data.d_pairwise;
  Eigen::Index rows = 0;
  for (const auto& ex : data.examples) rows += unary ? ex.graph.num_vars() : ex.graph.num_edges();

  BiasedLogRegProblem p;
  p.features.resize(d, rows);
  p.bias.resize(L, rows);
  p.gold.resize(static_cast<std::size_t>(rows));
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < data.examples.size(); ++k) {
    const Example& ex = data.examples[k];
    const RegionGraph& g = ex.graph;
    if (!ex.gold) throw std::invalid_argument("example " + std::to_string(k) + " has no labels; cannot train");
    const BiasTables b = compute_biases(g, states[k].lambda, states[k].loss, eps);
    const int count = unary ? g.num_vars() : g.num_edges();
    const Eigen::Index first = unary ? 0 : g.table_offset(g.edge_region(0));
    p.features.middleCols(at, count) = unary ? ex.unary : ex.pairwise;
    p.bias.middleCols(at, count) = Eigen::Map<const Matrix>(b.values.data() + first, L, count);
    for (int r = 0; r < count; ++r) {
      const int region = unary ? r : g.edge_region(r);
      p.gold[static_cast<std::size_t>(at + r)] = region_config(g, region, *ex.gold);
    }
    at += count;
  }
  return p;
}

Trainer::Trainer(const Dataset& train, TrainConfig config) : data_(train), config_(std::move(config)) {
  data_.validate();
  require(!data_.examples.empty(), "training set is empty");
  require(config_.epsilon > 0.0, "epsilon must be positive");
  model_ = Model::zero(data_.num_labels, data_.d_unary, data_.d_pairwise, config_.epsilon);
  states_.resize(data_.examples.size());
  for (std::size_t k = 0; k < states_.size(); ++k) {
    const Example& ex = data_.examples[k];
    if (!ex.gold) throw std::invalid_argument("example " + std::to_string(k) + " has no labels; cannot train");
    states_[k].loss = hamming_tables(ex.graph, *ex.gold);
    states_[k].lambda = Messages(ex.graph);
  }
  refresh_potentials();
}

void Trainer::refresh_potentials() {
  parallel_for(states_.size(), [&](std::size_t k) {
    const Example& ex = data_.examples[k];
    states_[k].scores = model_.scores(ex);
    states_[k].theta = build_theta(ex.graph, states_[k].scores, states_[k].loss, config_.epsilon);
  });
}

void Trainer::update(FactorKind kind) {
  const bool unary = kind == FactorKind::Unary;
  const BiasedLogRegProblem problem = assemble_tied_problem(data_, states_, kind, config_.epsilon);
  FitConfig fc = unary ? config_.unary_fit : config_.pairwise_fit;
  fc.seed = derive_seed(config_.seed, 2 * static_cast<std::uint64_t>(iteration_) + (unary ? 0 : 1));
  const OracleKind oracle = unary ? config_.unary : config_.pairwise;
  Classifier& target = unary ? model_.unary : model_.pairwise;
  try {
    target = fit(oracle, problem, fc, &target);
  } catch (const std::exception& e) {
    throw std::runtime_error("iteration " + std::to_string(iteration_ + 1) + ", " + (unary ? "unary" : "pairwise") +
                             " oracle '" + std::string(kind_name(oracle)) + "': " + e.what());
  }
  refresh_potentials();
}

void Trainer::update_unary() { update(FactorKind::Unary); }
void Trainer::update_pairwise() { update(FactorKind::Pairwise); }

void Trainer::pass_messages() {
  const SmoothingConfig mp = config_.train_inference();
  parallel_for(states_.size(), [&](std::size_t k) {
    run_message_passing(data_.examples[k].graph, states_[k].theta, states_[k].lambda, mp);
  });
}

void Trainer::iterate() {
  update_unary();
  pass_messages();
  update_pairwise();
  pass_messages();
  ++iteration_;
}

double Trainer::joint_objective() const {
  double total = 0.0;
  for (std::size_t k = 0; k < states_.size(); ++k) {
    const Example& ex = data_.examples[k];
    const auto& s = states_[k];
    total += -energy(ex.graph, s.scores, *ex.gold, config_.epsilon) +
             dual_objective(ex.graph, s.theta, s.lambda, config_.epsilon);
  }
  return total;
}

TrainResult train(const Dataset& train_set, const Dataset& test_set, const TrainConfig& config,
                  const CurveCallback& on_iteration) {
  require(config.outer_iters >= 0, "outer iteration count must be nonnegative");
  if (config.track_test_error) test_set.validate();
  Trainer trainer(train_set, config);
  TrainResult result;
  const SmoothingConfig eval = config.test_inference();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto record = [&] {
    CurvePoint p{trainer.iteration(), nan, nan};
    if (config.track_train_error) p.train_error = dataset_error(trainer.model(), train_set, eval);
    if (config.track_test_error && !test_set.examples.empty())
      p.test_error = dataset_error(trainer.model(), test_set, eval);
    result.curve.push_back(p);
    if (on_iteration) on_iteration(p);
  };
  record();
  for (int it = 0; it < config.outer_iters; ++it) {
    trainer.iterate();
    record();
  }
  result.model = trainer.model();
  return result;
}

Labeling predict(const Model& model, const Example& example, const SmoothingConfig& config) {
  const RegionGraph& g = example.graph;
  const Potentials theta = build_theta(g, model.scores(example), model.epsilon);
  Messages lambda(g);
  SmoothingConfig cfg = config;
  cfg.epsilon = model.epsilon;
  run_message_passing(g, theta, lambda, cfg);
  return decode(g, compute_marginals(g, theta, lambda, model.epsilon));
}

double univariate_error(const Labeling& predicted, const Labeling& gold) {
  require(predicted.size() == gold.size(), "labelings differ in size");
  if (gold.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) wrong += predicted[i] != gold[i];
  return static_cast<double>(wrong) / static_cast<double>(gold.size());
}

double dataset_error(const Model& model, const Dataset& data, const SmoothingConfig& config,
                     std::vector<Labeling>* predictions) {
  std::vector<Labeling> preds(data.examples.size());
  parallel_for(preds.size(), [&](std::size_t k) { preds[k] = predict(model, data.examples[k], config); });
  std::size_t wrong = 0, total = 0;
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const auto& gold = data.examples[k].gold;
    require(gold.has_value(), "example " + std::to_string(k) + " has no labels to score against");
    for (std::size_t i = 0; i < gold->size(); ++i) wrong += preds[k][i] != (*gold)[i];
    total += gold->size();
  }
  if (predictions) *predictions = std::move(preds);
  return total == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(total);
}

double empirical_risk(const Dataset& data, const Model& model, const SmoothingConfig& budget) {
  double total = 0.0;
  for (const auto& ex : data.examples) {
    require(ex.gold.has_value(), "empirical risk needs labeled examples");
    total += smoothed_loss(ex.graph, *ex.gold, model.scores(ex), model.epsilon, budget);
  }
  return total;
}

}  // namespace smoothcrf
