#include <algorithm>
#include <numeric>
#include <random>

#include "smoothcrf/oracle.hpp"
#include "smoothcrf/random.hpp"

namespace smoothcrf {
namespace {

void gather(const BiasedLogRegProblem& src, const std::vector<Eigen::Index>& order, std::size_t begin,
            std::size_t end, BiasedLogRegProblem& dst) {
  const auto n = static_cast<Eigen::Index>(end - begin);
  dst.features.resize(src.dim(), n);
  dst.bias.resize(src.bias.rows(), n);
  dst.gold.resize(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index k = order[begin + static_cast<std::size_t>(j)];
    dst.features.col(j) = src.features.col(k);
    dst.bias.col(j) = src.bias.col(k);
    dst.gold[static_cast<std::size_t>(j)] = src.gold[static_cast<std::size_t>(k)];
  }
}

}  // namespace

Classifier fit_mlp(const BiasedLogRegProblem& problem, const FitConfig& config, const Classifier* warm) {
  problem.validate();
  const MlpFitConfig& cfg = config.mlp;
  const int L = problem.num_labels();
  const Eigen::Index d = problem.dim();
  const Eigen::Index K = problem.num_rows();
  require(d >= 1 && cfg.hidden >= 1, "MLP needs at least one feature and one hidden unit");

  std::mt19937_64 rng(derive_seed(config.seed, 0x6d6c70));
  MlpModel model;
  const auto* prev = warm && config.warm_start ? std::get_if<MlpModel>(&warm->model()) : nullptr;
  if (prev && prev->hidden.cols() == d && prev->output.rows() == L) {
    model = *prev;
  } else {
    std::normal_distribution<double> init(0.0, cfg.init_scale);
    model.hidden = Matrix::NullaryExpr(cfg.hidden, d, [&] { return init(rng); });
    model.output = Matrix::Zero(L, cfg.hidden);
  }
  auto objective = [&](const MlpModel& m) { return logistic_objective(Classifier::mlp(m.hidden, m.output), problem); };

  // With a zero output layer the network is the zero classifier.
  const double zero_objective = logistic_objective(Matrix::Zero(L, K), problem);
  double start_objective = objective(model);
  if (start_objective < zero_objective) {
    model.output.setZero();
    start_objective = zero_objective;
  }
  const MlpModel start = model;
  if (cfg.learning_rate == 0.0 || cfg.epochs <= 0 || K == 0)
    return Classifier::mlp(std::move(model.hidden), std::move(model.output));

  Matrix step_hidden = Matrix::Zero(model.hidden.rows(), d);
  Matrix step_output = Matrix::Zero(L, model.hidden.rows());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch = static_cast<std::size_t>(std::max<Eigen::Index>(1, std::min<Eigen::Index>(cfg.batch_size, K)));
  BiasedLogRegProblem mini;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::size_t e = std::min(order.size(), b + batch);
      gather(problem, order, b, e, mini);
      const MlpGradient g = logistic_gradient(model, mini);
      const double scale = cfg.gradient_weight * cfg.gradient_scale / static_cast<double>(e - b);
      step_hidden = cfg.momentum * step_hidden + scale * g.hidden;
      step_output = cfg.momentum * step_output + scale * g.output;
      model.hidden += cfg.learning_rate * step_hidden;
      model.output += cfg.learning_rate * step_output;
    }
    if (!model.hidden.allFinite() || !model.output.allFinite())
      throw std::runtime_error("MLP fit diverged: non-finite parameters after epoch " + std::to_string(epoch));
  }
  if (objective(model) < start_objective) model = start;
  return Classifier::mlp(std::move(model.hidden), std::move(model.output));
}

}  // namespace smoothcrf
