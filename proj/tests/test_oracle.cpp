#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "smoothcrf/oracle.hpp"

using namespace smoothcrf;
using doctest::Approx;

namespace {

BiasedLogRegProblem random_problem(std::mt19937_64& rng, Eigen::Index rows, int d, int L, double bias_scale = 1.0) {
  std::normal_distribution<double> normal;
  BiasedLogRegProblem p;
  p.features = Matrix::NullaryExpr(d, rows, [&] { return normal(rng); });
  p.bias = Matrix::NullaryExpr(L, rows, [&] { return bias_scale * normal(rng); });
  p.gold.resize(static_cast<std::size_t>(rows));
  for (auto& y : p.gold) y = static_cast<int>(rng() % static_cast<unsigned>(L));
  return p;
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({1e-8, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_CASE("kind names round trip") {
  for (auto k : kAllKinds) CHECK(parse_kind(kind_name(k)) == k);
  CHECK_FALSE(parse_kind("bogus").has_value());
  CHECK(kind_name(OracleKind::Constant) == "const");
}

TEST_CASE("objective closed forms") {
  BiasedLogRegProblem p;
  p.features = Matrix::Ones(1, 5);
  p.bias = Matrix::Zero(3, 5);
  p.gold = {0, 1, 2, 0, 1};
  CHECK(logistic_objective(Classifier::zero(3, 1), p) == Approx(-5 * std::log(3.0)));

  BiasedLogRegProblem q;
  q.features = Matrix::Ones(1, 1);
  q.bias = Matrix(2, 1);
  q.bias << 0.0, std::log(3.0);
  q.gold = {0};
  CHECK(logistic_objective(Classifier::zero(2, 1), q) == Approx(-std::log(4.0)).epsilon(1e-12));
  CHECK(-std::log(4.0) == Approx(-1.386294).epsilon(1e-6));
}

TEST_CASE("problem validation") {
  std::mt19937_64 rng(1);
  auto p = random_problem(rng, 4, 2, 2);
  p.gold[0] = 2;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.gold[0] = 0;
  p.bias(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  CHECK_THROWS_AS(logistic_objective(Classifier::zero(2, 3), random_problem(rng, 4, 2, 2)), std::invalid_argument);
}

TEST_CASE("linear gradient matches finite differences") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_problem(rng, 12, 3, 3);
    std::normal_distribution<double> normal;
    LinearModel m{Matrix::NullaryExpr(3, 3, [&] { return normal(rng); })};
    const Matrix g = logistic_gradient(m, p);
    for (Eigen::Index i = 0; i < m.weights.size(); ++i) {
      auto f = [&](const Vector& w) {
        return logistic_objective(Classifier::linear(Eigen::Map<const Matrix>(w.data(), 3, 3)), p);
      };
      const Vector w = Eigen::Map<const Vector>(m.weights.data(), 9);
      const double fd = testing::directional_derivative(f, w, Vector::Unit(9, i), 1e-5);
      CHECK(relative_error(g.data()[i], fd) <= 1e-4);
    }
  }
}

TEST_CASE("MLP gradient matches finite differences") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_problem(rng, 10, 2, 3);
    std::normal_distribution<double> normal;
    MlpModel m{Matrix::NullaryExpr(4, 2, [&] { return normal(rng); }),
               Matrix::NullaryExpr(3, 4, [&] { return normal(rng); })};
    const MlpGradient g = logistic_gradient(m, p);
    const Eigen::Index nh = m.hidden.size(), no = m.output.size();
    Vector theta(nh + no);
    theta << Eigen::Map<const Vector>(m.hidden.data(), nh), Eigen::Map<const Vector>(m.output.data(), no);
    auto f = [&](const Vector& t) {
      return logistic_objective(Classifier::mlp(Eigen::Map<const Matrix>(t.data(), 4, 2),
                                                Eigen::Map<const Matrix>(t.data() + nh, 3, 4)),
                                p);
    };
    for (Eigen::Index i = 0; i < nh + no; ++i) {
      const double analytic = i < nh ? g.hidden.data()[i] : g.output.data()[i - nh];
      const double fd = testing::directional_derivative(f, theta, Vector::Unit(nh + no, i), 1e-5);
      CHECK(relative_error(analytic, fd) <= 1e-4);
    }
  }
}

TEST_CASE("bias gradient is the summed residual") {
  std::mt19937_64 rng(4);
  auto p = random_problem(rng, 2, 2, 3);
  const Matrix scores = Matrix::Random(3, 2);
  const Matrix r = score_residuals(scores, p);
  for (int y = 0; y < 3; ++y) {
    for (int k = 0; k < 2; ++k) {
      auto shifted = p;
      shifted.bias(y, k) += 1e-6;
      const double plus = logistic_objective(scores, shifted);
      shifted.bias(y, k) -= 2e-6;
      const double minus = logistic_objective(scores, shifted);
      CHECK((plus - minus) / 2e-6 == Approx(r(y, k)).epsilon(1e-6));
    }
  }
}

TEST_CASE("symmetric balanced problem has zero constant-direction gradient") {
  BiasedLogRegProblem p;
  p.features = Matrix::Ones(1, 4);
  p.bias = Matrix::Zero(2, 4);
  p.gold = {0, 1, 0, 1};
  const Matrix g = logistic_gradient(LinearModel{Matrix::Zero(2, 1)}, p);
  CHECK(g.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zero and constant fitters") {
  BiasedLogRegProblem p;
  p.features = Matrix::Ones(1, 4);
  p.bias = Matrix::Zero(2, 4);
  p.gold = {0, 1, 0, 1};
  CHECK(fit_zero(p).predict(Vector::Ones(1)).isZero());
  const auto balanced = fit_constant(p, FitConfig{});
  CHECK(balanced.predict(Vector::Ones(1)).cwiseAbs().maxCoeff() < 1e-8);

  p.gold = {0, 0, 0, 1};
  const Vector c = fit_constant(p, FitConfig{}).predict(Vector::Ones(1));
  CHECK(c[0] == Approx(0.5 * std::log(3.0)).epsilon(1e-7));
  CHECK(c[1] == Approx(-0.5 * std::log(3.0)).epsilon(1e-7));
  CHECK(c.sum() == Approx(0.0).epsilon(1e-12));
}

TEST_CASE("linear fit separates a separable problem") {
  BiasedLogRegProblem p;
  p.features.resize(2, 2);
  p.features << 1.0, -1.0, 1.0, 1.0;
  p.bias = Matrix::Zero(2, 2);
  p.gold = {0, 1};
  FitConfig cfg;
  cfg.linear.max_iters = 200;
  const auto f = fit_linear(p, cfg);
  const Matrix s = f.predict_batch(p.features);
  CHECK(s(0, 0) > s(1, 0));
  CHECK(s(1, 1) > s(0, 1));
}

TEST_CASE("linear fit reaches the optimum of a small problem") {
  std::mt19937_64 rng(5);
  const auto p = random_problem(rng, 10, 2, 2, 0.5);
  FitConfig cfg;
  const double fitted = logistic_objective(fit_linear(p, cfg), p);
  CHECK(fitted >= logistic_objective(Classifier::zero(2, 2), p));
  FitConfig long_run;
  long_run.linear.max_iters = 5000;
  long_run.linear.grad_tol = 0.0;
  const double best = logistic_objective(fit_linear(p, long_run), p);
  CHECK(fitted >= best - 1e-3);

  // Grid search over the difference of the two weight rows (the only identifiable part).
  const auto small = random_problem(rng, 3, 2, 2, 0.5);
  double grid_best = -1e300;
  for (double a = -6; a <= 6; a += 0.05)
    for (double b = -6; b <= 6; b += 0.05) {
      Matrix W(2, 2);
      W << a, b, 0.0, 0.0;
      grid_best = std::max(grid_best, logistic_objective(Classifier::linear(W), small));
    }
  CHECK(logistic_objective(fit_linear(small, long_run), small) >= grid_best - 1e-3);
}

TEST_CASE("uniform bias shifts leave the objective and the linear fit unchanged") {
  std::mt19937_64 rng(6);
  const auto p = random_problem(rng, 30, 3, 3);
  auto shifted = p;
  for (Eigen::Index k = 0; k < p.num_rows(); ++k) shifted.bias.col(k).array() += 0.37 * static_cast<double>(k % 5);
  const Matrix scores = Matrix::Random(3, 30);
  CHECK(logistic_objective(scores, shifted) == Approx(logistic_objective(scores, p)).epsilon(1e-12));
  // Run both fits to the (unique) optimum so rounding along the way cannot matter.
  FitConfig cfg;
  cfg.linear.max_iters = 1000;
  cfg.linear.grad_tol = 1e-13;
  const auto a = std::get<LinearModel>(fit_linear(p, cfg).model()).weights;
  const auto b = std::get<LinearModel>(fit_linear(shifted, cfg).model()).weights;
  CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("linear warm start") {
  std::mt19937_64 rng(7);
  const auto p = random_problem(rng, 50, 3, 2);
  FitConfig cfg;
  cfg.linear.max_iters = 3;
  const auto first = fit_linear(p, cfg);
  const auto second = fit_linear(p, cfg, &first);
  CHECK(logistic_objective(second, p) >= logistic_objective(first, p));
  CHECK(fit(OracleKind::Linear, p, cfg, &first).kind() == OracleKind::Linear);
}

TEST_CASE("MLP with zero learning rate keeps its parameters") {
  std::mt19937_64 rng(8);
  const auto p = random_problem(rng, 20, 2, 2);
  FitConfig cfg;
  cfg.mlp.learning_rate = 0.0;
  const auto start = fit_mlp(p, cfg);
  const auto again = fit_mlp(p, cfg, &start);
  const auto& a = std::get<MlpModel>(start.model());
  const auto& b = std::get<MlpModel>(again.model());
  CHECK(a.hidden == b.hidden);
  CHECK(a.output == b.output);
}

TEST_CASE("MLP learns XOR") {
  BiasedLogRegProblem p;
  p.features.resize(3, 4);
  p.features << 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1, 1;
  p.bias = Matrix::Zero(2, 4);
  p.gold = {0, 1, 1, 0};
  FitConfig cfg;
  cfg.mlp.hidden = 8;
  cfg.mlp.epochs = 4000;
  cfg.mlp.learning_rate = 0.02;
  cfg.mlp.init_scale = 2.0;
  const auto f = fit_mlp(p, cfg);
  const Matrix s = f.predict_batch(p.features);
  for (int k = 0; k < 4; ++k) {
    Eigen::Index arg;
    s.col(k).maxCoeff(&arg);
    CHECK(arg == p.gold[static_cast<std::size_t>(k)]);
  }
  // No linear classifier can get all four right.
  FitConfig lin;
  lin.linear.max_iters = 500;
  const Matrix ls = fit_linear(p, lin).predict_batch(p.features);
  int right = 0;
  for (int k = 0; k < 4; ++k) right += (ls(p.gold[static_cast<std::size_t>(k)], k) > ls(1 - p.gold[static_cast<std::size_t>(k)], k));
  CHECK(right < 4);
}

TEST_CASE("fitters never fall below the zero classifier") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_problem(rng, 60, 3, 3, 3.0);
    const double zero = logistic_objective(Classifier::zero(3, 3), p);
    FitConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    for (auto k : kAllKinds) CHECK(logistic_objective(fit(k, p, cfg), p) >= zero - 1e-9);
  }
}

TEST_CASE("boosted trees: leaf mass and monotone rounds") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_problem(rng, 100 + 37 * trial, 3, 2 + trial % 3);
    FitConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    std::vector<double> trace;
    const auto f = fit_gbt(p, cfg, nullptr, &trace);
    REQUIRE(trace.size() >= 2);
    for (std::size_t r = 1; r < trace.size(); ++r) CHECK(trace[r] >= trace[r - 1]);
    CHECK(trace.back() > trace.front());

    const auto K = p.num_rows();
    const auto min_rows = static_cast<long>(std::ceil(0.05 * static_cast<double>(K)));
    for (const auto& tree : std::get<BoostedTrees>(f.model()).trees) {
      std::vector<long> count(tree.nodes.size(), 0);
      for (Eigen::Index k = 0; k < K; ++k) ++count[static_cast<std::size_t>(tree.leaf_of(p.features.col(k).data()))];
      for (std::size_t n = 0; n < tree.nodes.size(); ++n)
        if (tree.nodes[n].feature < 0) CHECK(count[n] >= min_rows);
    }
  }
}

TEST_CASE("boosting preconditions and zero rounds") {
  std::mt19937_64 rng(11);
  CHECK_THROWS_AS(fit_gbt(random_problem(rng, 19, 2, 2), FitConfig{}), std::invalid_argument);
  FitConfig none;
  none.boost.rounds = 0;
  const auto p = random_problem(rng, 40, 2, 2);
  const auto f = fit_gbt(p, none);
  CHECK(f.predict_batch(p.features).isZero());
}

TEST_CASE("boosting warm start accumulates rounds") {
  std::mt19937_64 rng(12);
  const auto p = random_problem(rng, 200, 2, 2);
  FitConfig cfg;
  const auto a = fit_gbt(p, cfg);
  const auto b = fit_gbt(p, cfg, &a);
  CHECK(std::get<BoostedTrees>(b.model()).rounds > std::get<BoostedTrees>(a.model()).rounds);
  CHECK(logistic_objective(b, p) >= logistic_objective(a, p));
}

TEST_CASE("boosted fit is deterministic given the seed") {
  std::mt19937_64 rng(13);
  const auto p = random_problem(rng, 120, 2, 3);
  FitConfig cfg;
  cfg.seed = 99;
  CHECK(fit_gbt(p, cfg).predict_batch(p.features) == fit_gbt(p, cfg).predict_batch(p.features));
}

TEST_CASE("classifier predictions") {
  CHECK(Classifier::zero(3, 2).predict(Vector::Ones(2)).isZero());
  Matrix W(2, 3);
  W << 1, 2, 3, 4, 5, 6;
  CHECK(Classifier::linear(W).predict(Vector::Unit(3, 0)) == W.col(0));
  CHECK_THROWS_AS(Classifier::linear(W).predict(Vector::Ones(2)), std::invalid_argument);

  RegressionTree stump;
  stump.label = 1;
  stump.nodes = {{0, 0.5, 1, 2, 0.0}, {-1, 0.0, -1, -1, -1.0}, {-1, 0.0, -1, -1, 2.0}};
  BoostedTrees trees;
  trees.rounds = 1;
  trees.trees = {stump};
  const auto f = Classifier::boosted(2, 1, trees);
  const double delta = 1e-9;
  CHECK(f.predict(Vector::Constant(1, 0.5 - delta))[1] == -1.0);
  CHECK(f.predict(Vector::Constant(1, 0.5))[1] == -1.0);
  CHECK(f.predict(Vector::Constant(1, 0.5 + delta))[1] == 2.0);
  CHECK(f.predict(Vector::Constant(1, 3.0))[0] == 0.0);
}
