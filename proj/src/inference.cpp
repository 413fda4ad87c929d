#include "smoothcrf/inference.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace smoothcrf {
namespace {

// log-sum-exp over n strided values; skips the exp of the maximum.
inline double lse(const double* x, int n, int stride = 1) {
  if (n == 2) {
    const double a = x[0], b = x[stride];
    return std::max(a, b) + std::log(1.0 + std::exp(-std::abs(a - b)));
  }
  int arg = 0;
  double m = x[0];
  for (int k = 1; k < n; ++k) {
    if (x[k * stride] > m) {
      m = x[k * stride];
      arg = k;
    }
  }
  double s = 1.0;
  for (int k = 0; k < n; ++k)
    if (k != arg) s += std::exp(x[k * stride] - m);
  return m + std::log(s);
}

void check_inputs(const RegionGraph& g, const Potentials& theta, const Messages& lambda, double eps) {
  require(eps > 0.0, "epsilon must be positive");
  require(theta.values.size() == g.table_size(), "potential table size does not match graph");
  require(lambda.values.size() == g.message_size(), "message size does not match graph");
  require(theta.values.allFinite(), "potentials contain non-finite entries");
  require(lambda.values.allFinite(), "messages contain non-finite entries");
}

// Scratch space for star updates so sweeps do not allocate.
class StarUpdater {
 public:
  StarUpdater(const RegionGraph& g, const Potentials& theta, Messages& lambda, double eps)
      : g_(g), theta_(theta.values.data()), lambda_(lambda.values.data()), eps_(eps), L_(g.num_labels()) {
    const std::size_t L = static_cast<std::size_t>(L_);
    node_logit_.resize(L);
    edge_buf_.resize(L * L);
    sum_.resize(L);
    std::size_t max_deg = 0;
    for (int v = 0; v < g.num_vars(); ++v) max_deg = std::max(max_deg, g.incident(v).size());
    edge_log_marg_.resize(max_deg * L);
  }

  void update(int node) {
    switch (L_) {
      case 2: return update_fixed<2>(node);
      case 3: return update_fixed<3>(node);
      default: return update_fixed<0>(node);
    }
  }

 private:
  // N > 0 fixes the label count at compile time so the small loops unroll.
  template <int N>
  void update_fixed(int node) {
    const auto inc = g_.incident(node);
    if (inc.empty()) return;
    const int L = N > 0 ? N : L_;
    const double inv_eps = 1.0 / eps_;
    const Eigen::Index edge_base = g_.table_offset(g_.num_vars());
    double* sum = sum_.data();
    double* buf = edge_buf_.data();

    const double* th = theta_ + static_cast<Eigen::Index>(node) * L;
    for (int y = 0; y < L; ++y) sum[y] = th[y];
    for (const auto& [e, side] : inc) {
      const double* lam = lambda_ + g_.message_offset(e, side);
      for (int y = 0; y < L; ++y) sum[y] -= lam[y];
    }
    for (int y = 0; y < L; ++y) sum[y] *= inv_eps;
    const double node_lse = lse(sum, L);
    for (int y = 0; y < L; ++y) sum[y] -= node_lse;

    for (std::size_t k = 0; k < inc.size(); ++k) {
      const auto [e, side] = inc[k];
      const double* te = theta_ + edge_base + static_cast<Eigen::Index>(e) * L * L;
      const double* l0 = lambda_ + g_.message_offset(e, 0);
      const double* l1 = l0 + L;
      for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b) buf[a * L + b] = (te[a * L + b] + l0[a] + l1[b]) * inv_eps;
      double* marg = edge_log_marg_.data() + k * L;
      for (int y = 0; y < L; ++y) marg[y] = side == 0 ? lse(buf + y * L, L, 1) : lse(buf + y, L, L);
      const double z = lse(marg, L);
      for (int y = 0; y < L; ++y) {
        marg[y] -= z;
        sum[y] += marg[y];
      }
    }

    const double share = eps_ / (1.0 + static_cast<double>(inc.size()));
    for (std::size_t k = 0; k < inc.size(); ++k) {
      const auto [e, side] = inc[k];
      double* lam = lambda_ + g_.message_offset(e, side);
      const double* marg = edge_log_marg_.data() + k * L;
      for (int y = 0; y < L; ++y) lam[y] += share * sum[y] - eps_ * marg[y];
    }
  }

  const RegionGraph& g_;
  const double* theta_;
  double* lambda_;
  double eps_;
  int L_;
  std::vector<double> node_logit_, edge_buf_, sum_, edge_log_marg_;
};

// Largest disagreement between a node's marginal and its incident edges'.
std::vector<double> node_disagreement(const RegionGraph& g, const Pseudomarginals& mu) {
  const int L = g.num_labels();
  const Eigen::Index edge_base = g.table_offset(g.num_vars());
  const double* m = mu.values.data();
  std::vector<double> out(static_cast<std::size_t>(g.num_vars()), 0.0);
  for (int e = 0; e < g.num_edges(); ++e) {
    const double* table = m + edge_base + static_cast<Eigen::Index>(e) * L * L;
    const Edge& ed = g.edge(e);
    const double* mi = m + static_cast<Eigen::Index>(ed.first) * L;
    const double* mj = m + static_cast<Eigen::Index>(ed.second) * L;
    auto& di = out[static_cast<std::size_t>(ed.first)];
    auto& dj = out[static_cast<std::size_t>(ed.second)];
    for (int y = 0; y < L; ++y) {
      double row = 0.0, col = 0.0;
      for (int o = 0; o < L; ++o) {
        row += table[y * L + o];
        col += table[o * L + y];
      }
      di = std::max(di, std::abs(row - mi[y]));
      dj = std::max(dj, std::abs(col - mj[y]));
    }
  }
  return out;
}

}  // namespace

Potentials region_logits(const RegionGraph& g, const Potentials& theta, const Messages& lambda) {
  Potentials z = Potentials(g);
  z.values = theta.values;
  const int L = g.num_labels();
  const Eigen::Index edge_base = g.table_offset(g.num_vars());
  double* out = z.values.data();
  const double* lam = lambda.values.data();
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const double* l0 = lam + g.message_offset(e, 0);
    const double* l1 = lam + g.message_offset(e, 1);
    double* table = out + edge_base + static_cast<Eigen::Index>(e) * L * L;
    for (int a = 0; a < L; ++a)
      for (int b = 0; b < L; ++b) table[a * L + b] += l0[a] + l1[b];
    double* zi = out + static_cast<Eigen::Index>(ed.first) * L;
    double* zj = out + static_cast<Eigen::Index>(ed.second) * L;
    for (int y = 0; y < L; ++y) {
      zi[y] -= l0[y];
      zj[y] -= l1[y];
    }
  }
  return z;
}

Pseudomarginals compute_marginals(const RegionGraph& g, const Potentials& theta, const Messages& lambda,
                                  double eps) {
  check_inputs(g, theta, lambda, eps);
  const Potentials z = region_logits(g, theta, lambda);
  Pseudomarginals mu(g);
  const double inv_eps = 1.0 / eps;
  for (int r = 0; r < g.num_regions(); ++r) {
    const Eigen::Index off = g.table_offset(r);
    const int n = g.is_node(r) ? g.num_labels() : g.num_labels() * g.num_labels();
    const double* in = z.values.data() + off;
    double* out = mu.values.data() + off;
    double m = in[0];
    for (int c = 1; c < n; ++c) m = std::max(m, in[c]);
    double total = 0.0;
    for (int c = 0; c < n; ++c) {
      out[c] = std::exp((in[c] - m) * inv_eps);
      total += out[c];
    }
    for (int c = 0; c < n; ++c) out[c] /= total;
  }
  return mu;
}

double dual_objective(const RegionGraph& g, const Potentials& theta, const Messages& lambda, double eps) {
  check_inputs(g, theta, lambda, eps);
  const Potentials z = region_logits(g, theta, lambda);
  double total = 0.0;
  for (int r = 0; r < g.num_regions(); ++r) total += smoothed_max(z.region(g, r), eps);
  return total;
}

void star_update(const RegionGraph& g, const Potentials& theta, Messages& lambda, int node, double eps) {
  require(eps > 0.0, "epsilon must be positive");
  require(node >= 0 && node < g.num_vars(), "star update needs a node region");
  StarUpdater(g, theta, lambda, eps).update(node);
}

MessagePassingResult run_message_passing(const RegionGraph& g, const Potentials& theta, Messages& lambda,
                                         const SmoothingConfig& config) {
  check_inputs(g, theta, lambda, config.epsilon);
  require(config.max_iters >= 0, "max_iters must be nonnegative");
  MessagePassingResult result;
  const bool check = config.agreement_tol > 0.0;
  const int interval = std::max(1, config.check_interval);
  auto residual = [&] {
    return agreement_residual(g, compute_marginals(g, theta, lambda, config.epsilon));
  };
  if (g.num_edges() == 0 || config.max_iters == 0) {
    result.residual = residual();
    return result;
  }
  if (check) {
    result.residual = residual();
    if (result.residual <= config.agreement_tol) return result;
  }

  StarUpdater updater(g, theta, lambda, config.epsilon);
  std::vector<int> order(static_cast<std::size_t>(g.num_vars()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);

  bool measured = false;
  for (int sweep = 0; sweep < config.max_iters; ++sweep) {
    if (config.schedule == Schedule::Randomized) {
      std::shuffle(order.begin(), order.end(), rng);
    } else if (config.schedule == Schedule::Greedy) {
      const auto d = node_disagreement(g, compute_marginals(g, theta, lambda, config.epsilon));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return d[static_cast<std::size_t>(a)] > d[static_cast<std::size_t>(b)];
      });
    }
    for (int v : order) updater.update(v);
    result.iterations = sweep + 1;
    measured = false;
    if (check && (result.iterations % interval == 0 || result.iterations == config.max_iters)) {
      result.residual = residual();
      measured = true;
      if (result.residual <= config.agreement_tol) break;
    }
  }
  if (!measured) result.residual = residual();
  return result;
}

double agreement_residual(const RegionGraph& g, const Pseudomarginals& mu) {
  const auto d = node_disagreement(g, mu);
  return d.empty() ? 0.0 : *std::max_element(d.begin(), d.end());
}

double primal_objective(const RegionGraph& g, const Pseudomarginals& mu, const Potentials& theta, double eps) {
  require((mu.values.array() >= 0.0).all(), "pseudomarginals must be nonnegative");
  require(mu.values.size() == theta.values.size() && mu.values.size() == g.table_size(),
          "table sizes do not match graph");
  double entropy = 0.0;
  for (Eigen::Index k = 0; k < mu.values.size(); ++k) {
    const double p = mu.values[k];
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return theta.values.dot(mu.values) + eps * entropy;
}

Labeling decode(const RegionGraph& g, const Pseudomarginals& mu) {
  Labeling y(static_cast<std::size_t>(g.num_vars()), 0);
  for (int i = 0; i < g.num_vars(); ++i) {
    const auto m = mu.region(g, i);
    int best = 0;
    for (int k = 1; k < m.size(); ++k)
      if (m[k] > m[best]) best = k;
    y[static_cast<std::size_t>(i)] = best;
  }
  return y;
}

}  // namespace smoothcrf
