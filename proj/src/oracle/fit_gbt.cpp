#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "smoothcrf/oracle.hpp"
#include "smoothcrf/random.hpp"

namespace smoothcrf {
namespace {

inline double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }
inline double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Least-squares regression tree on a residual target. Every leaf keeps at
// least min_leaf of the rows it was grown on. `order[j]` lists all rows sorted
// by feature j (ties by row index); nodes filter it instead of sorting.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const std::vector<std::vector<Eigen::Index>>& order, const double* target,
              Eigen::Index min_leaf, int max_depth)
      : X_(X),
        order_(order),
        target_(target),
        min_leaf_(min_leaf),
        max_depth_(max_depth),
        tag_(static_cast<std::size_t>(X.cols()), -1) {}

  RegressionTree build(std::vector<Eigen::Index> rows, int label) {
    tree_ = RegressionTree{};
    tree_.label = label;
    grow(std::move(rows), 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  int grow(std::vector<Eigen::Index> rows, int depth) {
    const int index = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const auto n = static_cast<Eigen::Index>(rows.size());
    Split best;
    if (depth < max_depth_ && n >= 2 * min_leaf_) {
      for (auto k : rows) tag_[static_cast<std::size_t>(k)] = index;
      best = find_split(rows, index);
    }
    if (best.feature < 0) return index;
    std::vector<Eigen::Index> left, right;
    for (auto k : rows) (X_(best.feature, k) <= best.threshold ? left : right).push_back(k);
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(index)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return index;
  }

  Split find_split(const std::vector<Eigen::Index>& rows, int tag) {
    const auto n = static_cast<Eigen::Index>(rows.size());
    double total = 0.0;
    for (auto k : rows) total += target_[k];
    const double base = total * total / static_cast<double>(n);
    Split best;
    std::vector<Eigen::Index> sorted;
    sorted.reserve(rows.size());
    for (int j = 0; j < static_cast<int>(X_.rows()); ++j) {
      const auto& o = order_[static_cast<std::size_t>(j)];
      if (o.empty() || !(X_(j, o.front()) < X_(j, o.back()))) continue;
      sorted.clear();
      for (auto k : o)
        if (tag_[static_cast<std::size_t>(k)] == tag) sorted.push_back(k);
      double left = 0.0;
      for (Eigen::Index p = 1; p < n; ++p) {
        left += target_[sorted[static_cast<std::size_t>(p - 1)]];
        if (p < min_leaf_ || n - p < min_leaf_) continue;
        const double lo = X_(j, sorted[static_cast<std::size_t>(p - 1)]);
        const double hi = X_(j, sorted[static_cast<std::size_t>(p)]);
        if (!(lo < hi)) continue;
        const double right = total - left;
        const double gain = left * left / static_cast<double>(p) +
                            right * right / static_cast<double>(n - p) - base;
        if (gain > best.gain + 1e-12) {
          double threshold = lo + 0.5 * (hi - lo);
          if (!(threshold < hi)) threshold = lo;
          best = Split{j, threshold, gain};
        }
      }
    }
    return best;
  }

  const Matrix& X_;
  const std::vector<std::vector<Eigen::Index>>& order_;
  const double* target_;
  Eigen::Index min_leaf_;
  int max_depth_;
  RegressionTree tree_;
  std::vector<int> tag_;
};

int leaf_of(const RegressionTree& tree, const double* x) {
  int i = 0;
  while (tree.nodes[static_cast<std::size_t>(i)].feature >= 0) {
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return i;
}

// Collapses every split that would leave a child with fewer than min_leaf of
// all rows. Splits are chosen on the subsample, leaf sizes count the full data.
RegressionTree prune_small_leaves(const RegressionTree& tree, const Matrix& X, Eigen::Index min_leaf) {
  std::vector<Eigen::Index> reach(tree.nodes.size(), 0);
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    const double* x = X.col(k).data();
    int i = 0;
    for (;;) {
      ++reach[static_cast<std::size_t>(i)];
      const auto& n = tree.nodes[static_cast<std::size_t>(i)];
      if (n.feature < 0) break;
      i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
  }
  RegressionTree out;
  out.label = tree.label;
  auto copy = [&](auto&& self, int i) -> int {
    const int index = static_cast<int>(out.nodes.size());
    const auto& n = tree.nodes[static_cast<std::size_t>(i)];
    out.nodes.emplace_back();
    if (n.feature < 0 || reach[static_cast<std::size_t>(n.left)] < min_leaf ||
        reach[static_cast<std::size_t>(n.right)] < min_leaf)
      return index;
    const int l = self(self, n.left);
    const int r = self(self, n.right);
    auto& node = out.nodes[static_cast<std::size_t>(index)];
    node.feature = n.feature;
    node.threshold = n.threshold;
    node.left = l;
    node.right = r;
    return index;
  };
  copy(copy, 0);
  return out;
}

// One-dimensional Newton ascent on the logistic loss of a single label's
// score shift v, for rows whose log-odds of that label are `odds`.
double newton_leaf_value(const std::vector<double>& odds, const std::vector<char>& is_gold,
                         const BoostFitConfig& cfg) {
  auto value = [&](double v) {
    double s = 0.0;
    for (std::size_t k = 0; k < odds.size(); ++k) s += (is_gold[k] ? odds[k] + v : 0.0) - softplus(odds[k] + v);
    return s;
  };
  double v = 0.0;
  double current = value(v);
  for (int step = 0; step < cfg.newton_steps; ++step) {
    double grad = 0.0, curvature = 0.0;
    for (std::size_t k = 0; k < odds.size(); ++k) {
      const double p = logistic(odds[k] + v);
      grad += (is_gold[k] ? 1.0 : 0.0) - p;
      curvature += p * (1.0 - p);
    }
    if (std::abs(grad) < 1e-12) break;
    double next = curvature > 1e-12 ? v + grad / curvature : v + std::copysign(cfg.max_leaf_value, grad);
    next = std::clamp(next, -cfg.max_leaf_value, cfg.max_leaf_value);
    double candidate = value(next);
    for (int halve = 0; halve < 30 && candidate < current; ++halve) {
      next = 0.5 * (v + next);
      candidate = value(next);
    }
    if (candidate < current) break;
    v = next;
    current = candidate;
  }
  return v;
}

}  // namespace

Classifier fit_gbt(const BiasedLogRegProblem& problem, const FitConfig& config, const Classifier* warm,
                   std::vector<double>* trace) {
  problem.validate();
  const BoostFitConfig& cfg = config.boost;
  const Eigen::Index K = problem.num_rows();
  require(K >= 20, "gradient boosting needs at least 20 rows");
  const int L = problem.num_labels();
  const int d = static_cast<int>(problem.dim());

  BoostedTrees ensemble;
  const auto* prev = warm && config.warm_start ? std::get_if<BoostedTrees>(&warm->model()) : nullptr;
  if (prev && warm->num_labels() == L && warm->dim() == d) ensemble = *prev;
  Matrix scores = Classifier::boosted(L, d, ensemble).predict_batch(problem.features);
  double objective = logistic_objective(scores, problem);
  const double zero_objective = logistic_objective(Matrix::Zero(L, K), problem);
  if (objective < zero_objective) {
    ensemble = BoostedTrees{};
    scores.setZero();
    objective = zero_objective;
  }
  if (trace) trace->push_back(objective);

  const auto min_leaf = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(cfg.min_leaf_fraction * K - 1e-9)));
  const auto sample_size =
      std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::llround(cfg.subsample * static_cast<double>(K))), 1, K);
  const auto sample_min_leaf = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::ceil(cfg.min_leaf_fraction * static_cast<double>(sample_size) - 1e-9)));
  std::vector<Eigen::Index> all(static_cast<std::size_t>(K));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  std::vector<std::vector<Eigen::Index>> order(static_cast<std::size_t>(d), all);
  for (int j = 0; j < d; ++j)
    std::sort(order[static_cast<std::size_t>(j)].begin(), order[static_cast<std::size_t>(j)].end(),
              [&](Eigen::Index a, Eigen::Index b) {
                const double xa = problem.features(j, a), xb = problem.features(j, b);
                return xa < xb || (xa == xb && a < b);
              });

  for (int round = 0; round < cfg.rounds; ++round) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(ensemble.rounds)));
    std::vector<Eigen::Index> sample(all);
    for (Eigen::Index k = 0; k < sample_size; ++k) {
      std::uniform_int_distribution<Eigen::Index> pick(k, K - 1);
      std::swap(sample[static_cast<std::size_t>(k)], sample[static_cast<std::size_t>(pick(rng))]);
    }
    sample.resize(static_cast<std::size_t>(sample_size));
    std::sort(sample.begin(), sample.end());

    const Matrix residual = score_residuals(scores, problem);
    const Matrix logits = scores + problem.bias;
    std::vector<RegressionTree> round_trees;
    Vector target(K);
    for (int c = 0; c < L; ++c) {
      target = residual.row(c).transpose();
      TreeBuilder builder(problem.features, order, target.data(), sample_min_leaf, cfg.max_depth);
      RegressionTree tree = prune_small_leaves(builder.build(sample, c), problem.features, min_leaf);
      std::vector<std::vector<Eigen::Index>> leaf_rows(tree.nodes.size());
      for (auto k : sample) leaf_rows[static_cast<std::size_t>(leaf_of(tree, problem.features.col(k).data()))].push_back(k);
      for (std::size_t node = 0; node < tree.nodes.size(); ++node) {
        const auto& rows = leaf_rows[node];
        if (tree.nodes[node].feature >= 0 || rows.empty()) continue;
        std::vector<double> odds;
        std::vector<char> is_gold;
        odds.reserve(rows.size());
        is_gold.reserve(rows.size());
        for (auto k : rows) {
          const auto z = logits.col(k);
          double m = -std::numeric_limits<double>::infinity();
          for (int y = 0; y < L; ++y)
            if (y != c) m = std::max(m, z[y]);
          double s = 0.0;
          for (int y = 0; y < L; ++y)
            if (y != c) s += std::exp(z[y] - m);
          odds.push_back(z[c] - (m + std::log(s)));
          is_gold.push_back(problem.gold[static_cast<std::size_t>(k)] == c);
        }
        tree.nodes[static_cast<std::size_t>(node)].value = cfg.shrinkage * newton_leaf_value(odds, is_gold, cfg);
      }
      round_trees.push_back(std::move(tree));
    }

    Matrix delta = Matrix::Zero(L, K);
    for (Eigen::Index k = 0; k < K; ++k) {
      const double* x = problem.features.col(k).data();
      for (const auto& t : round_trees) delta(t.label, k) += t.evaluate(x);
    }
    // The subsample can make a round hurt the full objective; back off then.
    double scale = 1.0;
    bool accepted = false;
    Matrix candidate;
    double candidate_objective = objective;
    for (int tries = 0; tries < 10; ++tries) {
      candidate = scores + scale * delta;
      candidate_objective = logistic_objective(candidate, problem);
      if (candidate_objective >= objective) {
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) break;
    for (auto& t : round_trees) {
      for (auto& node : t.nodes) node.value *= scale;
      ensemble.trees.push_back(std::move(t));
    }
    ++ensemble.rounds;
    scores = std::move(candidate);
    objective = candidate_objective;
    if (trace) trace->push_back(objective);
  }
  return Classifier::boosted(L, d, std::move(ensemble));
}

}  // namespace smoothcrf
