#include <doctest.h>

#include "oracles.hpp"
#include "smoothcrf/loss.hpp"
#include "smoothcrf/trainer.hpp"

using namespace smoothcrf;
using doctest::Approx;

namespace {

SmoothingConfig long_budget() {
  SmoothingConfig c;
  c.max_iters = 5000;
  c.agreement_tol = 1e-12;
  return c;
}

ScoreTables random_scores(const RegionGraph& g, std::mt19937_64& rng, double scale) {
  ScoreTables s;
  s.values = testing::random_potentials(g, rng, scale).values;
  return s;
}

}  // namespace

TEST_CASE("hamming tables") {
  const auto g = RegionGraph::grid(2, 1, 2);
  const auto d = hamming_tables(g, {0, 1});
  CHECK(d.region(g, 0)[0] == 0.0);
  CHECK(d.region(g, 0)[1] == 1.0);
  CHECK(d.region(g, 1)[0] == 1.0);
  CHECK(d.region(g, 1)[1] == 0.0);
  CHECK(d.region(g, g.edge_region(0)).isZero());
  CHECK_THROWS_AS(hamming_tables(g, {0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(hamming_tables(g, {0}), std::invalid_argument);
}

TEST_CASE("summed loss tables equal the hamming distance") {
  const auto g = RegionGraph::grid(2, 2, 2);
  const Labeling gold = {0, 1, 1, 0};
  const auto d = hamming_tables(g, gold);
  Labeling y(4);
  for (int code = 0; code < 16; ++code) {
    int dist = 0;
    for (int i = 0; i < 4; ++i) {
      y[static_cast<std::size_t>(i)] = (code >> i) & 1;
      dist += y[static_cast<std::size_t>(i)] != gold[static_cast<std::size_t>(i)];
    }
    double total = 0.0;
    for (int r = 0; r < g.num_regions(); ++r) total += d.values[g.table_offset(r) + region_config(g, r, y)];
    CHECK(total == dist);
  }
}

TEST_CASE("loss-augmented potentials") {
  const auto g = RegionGraph::grid(1, 1, 2);
  const auto delta = hamming_tables(g, {0});
  ScoreTables scores(g);
  CHECK(build_theta(g, scores, delta, 0.1).values == delta.values);
  scores.values << 2.0, -2.0;
  const auto theta = build_theta(g, scores, delta, 0.1);
  CHECK(theta.values[0] == Approx(0.2));
  CHECK(theta.values[1] == Approx(0.8));
  CHECK(build_theta(g, scores, 0.1).values == 0.1 * scores.values);
}

TEST_CASE("entropy cap") {
  CHECK(entropy_cap(RegionGraph::grid(1, 1, 2)) == Approx(std::log(2.0)));
  CHECK(entropy_cap(RegionGraph::grid(2, 2, 2)) == Approx(8.3178).epsilon(1e-4));
  CHECK(entropy_cap(RegionGraph::grid(100, 100, 2)) == Approx(10000 * std::log(2.0) + 19800 * std::log(4.0)));
}

TEST_CASE("smoothed loss closed forms") {
  const auto one = RegionGraph::grid(1, 1, 2);
  const double eps = 0.1;
  CHECK(smoothed_loss(one, {1}, ScoreTables(one), eps, long_budget()) ==
        Approx(eps * std::log(1.0 + std::exp(1.0 / eps))).epsilon(1e-12));
}

TEST_CASE("exhaustive l1 closed forms") {
  const auto g = testing::chain(4, 2);
  CHECK(testing::exhaustive_l1(g, {0, 1, 0, 1}, ScoreTables(g), 0.1) == Approx(4.0));
  const auto one = RegionGraph::grid(1, 1, 2);
  ScoreTables s(one);
  s.values << 100.0, 0.0;
  CHECK(testing::exhaustive_l1(one, {0}, s, 0.1) == Approx(0.0));
  CHECK_THROWS(testing::exhaustive_l1(RegionGraph::grid(2, 2, 2), {0, 0, 0, 0}, ScoreTables(RegionGraph::grid(2, 2, 2)), 0.1));
}

TEST_CASE("smoothed loss is sandwiched by the enumerated loss on trees") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<int> size(1, 8);
  const double eps = 0.1;
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testing::random_tree(size(rng), 2, rng);
    const auto scores = random_scores(g, rng, 10.0);
    Labeling gold(static_cast<std::size_t>(g.num_vars()));
    for (auto& y : gold) y = static_cast<int>(rng() % 2);
    const double l1 = testing::exhaustive_l1(g, gold, scores, eps);
    const double l = smoothed_loss(g, gold, scores, eps, long_budget());
    CHECK(l >= l1 - 1e-6);
    CHECK(l <= l1 + eps * entropy_cap(g) + 1e-6);
  }
}

TEST_CASE("scaling contract: without loss the marginals depend on the scores only") {
  std::mt19937_64 rng(43);
  const auto g = RegionGraph::grid(3, 3, 2);
  const auto scores = random_scores(g, rng, 3.0);
  const auto lambda = Messages(g);
  // theta / eps = g for every eps; powers of two keep the arithmetic exact.
  const auto a = compute_marginals(g, build_theta(g, scores, 0.25), lambda, 0.25);
  const auto b = compute_marginals(g, build_theta(g, scores, 0.125), lambda, 0.125);
  CHECK(a.values == b.values);
  // Doubling the scores instead sharpens the marginals.
  ScoreTables doubled;
  doubled.values = 2.0 * scores.values;
  const auto c = compute_marginals(g, build_theta(g, doubled, 0.125), lambda, 0.125);
  CHECK_FALSE(c.values.isApprox(a.values, 1e-3));
}

TEST_CASE("loss without augmentation is at least the entropy floor") {
  std::mt19937_64 rng(47);
  const auto g = RegionGraph::grid(2, 2, 2);
  const auto scores = random_scores(g, rng, 2.0);
  const Labeling gold = {1, 0, 0, 1};
  const double eps = 0.1;
  const auto theta = build_theta(g, scores, eps);
  Messages lambda(g);
  run_message_passing(g, theta, lambda, long_budget());
  // A(theta) >= theta . (gold indicator) since a point mass is feasible with zero entropy.
  CHECK(-energy(g, scores, gold, eps) + dual_objective(g, theta, lambda, eps) >= -1e-9);
}

TEST_CASE("empirical risk") {
  Dataset empty;
  empty.d_unary = 1;
  empty.d_pairwise = 1;
  const auto m = Model::zero(2, 1, 1, 0.1);
  CHECK(empirical_risk(empty, m, long_budget()) == 0.0);

  Dataset one = empty;
  Example ex{RegionGraph::grid(2, 2, 2), Matrix::Ones(1, 4), Matrix::Ones(1, 4), Labeling{0, 1, 1, 0}};
  one.examples.push_back(ex);
  CHECK(empirical_risk(one, m, long_budget()) ==
        Approx(smoothed_loss(ex.graph, *ex.gold, m.scores(ex), 0.1, long_budget())).epsilon(1e-14));
}
