#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "smoothcrf/types.hpp"

namespace smoothcrf {

struct Edge {
  int first;
  int second;
};

struct GridDims {
  int width;
  int height;
};

/// Node and pairwise regions over a set of variables with a shared label
/// count. Regions [0, num_vars) are nodes; region num_vars + e is edge e.
/// An edge configuration (y_first, y_second) is stored at L * y_first + y_second.
class RegionGraph {
 public:
  /// 4-connected grid. Nodes are row-major; for each pixel in row-major
  /// order its right-neighbor edge comes first, then its down-neighbor edge.
  static RegionGraph grid(int width, int height, int num_labels);

  /// Arbitrary pairwise graph (chains, trees, ...). Self loops and repeated
  /// pairs are rejected.
  static RegionGraph from_edges(int num_vars, int num_labels, std::vector<Edge> edges);

  int num_vars() const { return num_vars_; }
  int num_labels() const { return num_labels_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_regions() const { return num_vars_ + num_edges(); }
  const std::optional<GridDims>& grid_dims() const { return grid_; }

  bool is_node(int region) const { return region < num_vars_; }
  int edge_region(int edge) const { return num_vars_ + edge; }
  const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  std::span<const Edge> edges() const { return edges_; }

  /// Subregions of a region: empty for nodes, the two endpoints for edges.
  std::span<const int> children_of(int region) const;
  /// Regions containing a region: incident edge regions for nodes, empty for edges.
  std::span<const int> parents_of(int region) const;

  /// Incident edges of a node together with the side (0 = first, 1 = second)
  /// the node occupies.
  struct Incidence {
    int edge;
    int side;
  };
  std::span<const Incidence> incident(int node) const {
    const auto b = incidence_offsets_[static_cast<std::size_t>(node)];
    const auto e = incidence_offsets_[static_cast<std::size_t>(node) + 1];
    return std::span<const Incidence>(incidence_).subspan(b, e - b);
  }

  /// L^{|region|}.
  int config_count(int region) const;
  Eigen::Index table_offset(int region) const {
    const Eigen::Index L = num_labels_;
    if (is_node(region)) return region * L;
    return num_vars_ * L + (region - num_vars_) * L * L;
  }
  Eigen::Index table_size() const;

  /// Messages are laid out per (edge, side) in blocks of L entries.
  Eigen::Index message_offset(int edge, int side) const {
    return (2 * static_cast<Eigen::Index>(edge) + side) * num_labels_;
  }
  Eigen::Index message_size() const { return 2 * static_cast<Eigen::Index>(num_edges()) * num_labels_; }

  /// True when the edge set is a forest.
  bool is_forest() const;

 private:
  RegionGraph(int num_vars, int num_labels, std::vector<Edge> edges);
  void check_region(int region) const;

  int num_vars_ = 0;
  int num_labels_ = 0;
  std::vector<Edge> edges_;
  std::optional<GridDims> grid_;
  std::vector<int> edge_children_;  // 2 per edge
  std::vector<int> parent_offsets_;
  std::vector<int> parents_;
  std::vector<std::size_t> incidence_offsets_;
  std::vector<Incidence> incidence_;
};

/// A flat vector of per-region tables. The tag keeps potentials, marginals,
/// losses and classifier scores from being mixed up.
template <typename Tag>
struct RegionTable {
  Vector values;

  RegionTable() = default;
  explicit RegionTable(const RegionGraph& g) : values(Vector::Zero(g.table_size())) {}
  RegionTable(const RegionGraph& g, double fill) : values(Vector::Constant(g.table_size(), fill)) {}

  auto region(const RegionGraph& g, int r) { return values.segment(g.table_offset(r), g.config_count(r)); }
  auto region(const RegionGraph& g, int r) const {
    return values.segment(g.table_offset(r), g.config_count(r));
  }
};

struct PotentialsTag;
struct PseudomarginalsTag;
struct LossTag;
struct ScoreTag;
struct BiasTag;

/// theta_alpha(y_alpha).
using Potentials = RegionTable<PotentialsTag>;
/// mu_alpha(y_alpha), one distribution per region.
using Pseudomarginals = RegionTable<PseudomarginalsTag>;
/// Delta_alpha(y_alpha) for a fixed gold labeling.
using LossTables = RegionTable<LossTag>;
/// Unscaled classifier outputs g_alpha(y_alpha).
using ScoreTables = RegionTable<ScoreTag>;
/// Per-region logistic-regression bias vectors.
using BiasTables = RegionTable<BiasTag>;

/// lambda_alpha(y_beta) for every (edge, endpoint) pair.
struct Messages {
  Vector values;

  Messages() = default;
  explicit Messages(const RegionGraph& g) : values(Vector::Zero(g.message_size())) {}

  auto to(const RegionGraph& g, int edge, int side) {
    return values.segment(g.message_offset(edge, side), g.num_labels());
  }
  auto to(const RegionGraph& g, int edge, int side) const {
    return values.segment(g.message_offset(edge, side), g.num_labels());
  }
};

/// Index of the configuration of a region under a full labeling.
int region_config(const RegionGraph& g, int region, const Labeling& y);

}  // namespace smoothcrf
