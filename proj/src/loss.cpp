#include "smoothcrf/loss.hpp"

namespace smoothcrf {

LossTables hamming_tables(const RegionGraph& g, const Labeling& gold) {
  require(static_cast<int>(gold.size()) == g.num_vars(), "gold labeling has wrong length");
  LossTables delta(g);
  for (int i = 0; i < g.num_vars(); ++i) {
    const int y = gold[static_cast<std::size_t>(i)];
    require(y >= 0 && y < g.num_labels(), "gold label out of range");
    auto t = delta.region(g, i);
    t.setOnes();
    t[y] = 0.0;
  }
  return delta;
}

Potentials build_theta(const RegionGraph& g, const ScoreTables& scores, const LossTables& loss, double eps) {
  require(scores.values.size() == g.table_size() && loss.values.size() == g.table_size(),
          "table sizes do not match graph");
  Potentials theta;
  theta.values = eps * scores.values + loss.values;
  return theta;
}

Potentials build_theta(const RegionGraph& g, const ScoreTables& scores, double eps) {
  require(scores.values.size() == g.table_size(), "table sizes do not match graph");
  Potentials theta;
  theta.values = eps * scores.values;
  return theta;
}

double energy(const RegionGraph& g, const ScoreTables& scores, const Labeling& y, double eps) {
  double total = 0.0;
  for (int r = 0; r < g.num_regions(); ++r) total += scores.region(g, r)[region_config(g, r, y)];
  return eps * total;
}

double entropy_cap(const RegionGraph& g) {
  const double L = g.num_labels();
  return g.num_vars() * std::log(L) + g.num_edges() * std::log(L * L);
}

double smoothed_loss(const RegionGraph& g, const Labeling& gold, const ScoreTables& scores, double eps,
                     const SmoothingConfig& budget, Messages* warm) {
  const Potentials theta = build_theta(g, scores, hamming_tables(g, gold), eps);
  Messages local(g);
  Messages& lambda = warm ? *warm : local;
  SmoothingConfig cfg = budget;
  cfg.epsilon = eps;
  run_message_passing(g, theta, lambda, cfg);
  return -energy(g, scores, gold, eps) + dual_objective(g, theta, lambda, eps);
}

}  // namespace smoothcrf
