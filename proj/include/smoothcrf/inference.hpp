#pragma once

#include <cstdint>

#include "smoothcrf/graph.hpp"

namespace smoothcrf {

enum class Schedule { RowMajor, Randomized, Greedy };

struct SmoothingConfig {
  double epsilon = 0.1;
  int max_iters = 25;
  /// Stop early once agreement_residual drops to this value. Zero disables.
  double agreement_tol = 1e-6;
  /// Sweeps between residual checks.
  int check_interval = 1;
  Schedule schedule = Schedule::RowMajor;
  std::uint64_t seed = 0;
};

struct MessagePassingResult {
  int iterations = 0;
  double residual = 0.0;
};

/// Logit of every region table, theta plus incoming/outgoing messages. The
/// marginals are softmax(logit / eps) per region.
Potentials region_logits(const RegionGraph& g, const Potentials& theta, const Messages& lambda);

/// Maximizing pseudomarginals of the message-dual for fixed messages.
Pseudomarginals compute_marginals(const RegionGraph& g, const Potentials& theta,
                                  const Messages& lambda, double eps);

/// Closed-form dual sum_alpha eps * logsumexp(logit_alpha / eps). Upper-bounds
/// the smoothed primal for every lambda.
double dual_objective(const RegionGraph& g, const Potentials& theta, const Messages& lambda,
                      double eps);

/// Block-coordinate minimization of the dual over all messages into `node`
/// from its incident edges. Updates lambda in place; isolated nodes are a no-op.
void star_update(const RegionGraph& g, const Potentials& theta, Messages& lambda, int node,
                 double eps);

/// Sweeps of star updates, stopping after config.max_iters sweeps or once the
/// agreement residual reaches config.agreement_tol.
MessagePassingResult run_message_passing(const RegionGraph& g, const Potentials& theta,
                                         Messages& lambda, const SmoothingConfig& config);

/// max |marginalized edge table - node table| over all edges, endpoints, labels.
double agreement_residual(const RegionGraph& g, const Pseudomarginals& mu);

/// theta . mu + eps * sum_alpha H(mu_alpha).
double primal_objective(const RegionGraph& g, const Pseudomarginals& mu, const Potentials& theta,
                        double eps);

/// Per-variable argmax of the node marginals, ties toward the lower label.
Labeling decode(const RegionGraph& g, const Pseudomarginals& mu);

}  // namespace smoothcrf
