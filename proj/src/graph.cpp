#include "smoothcrf/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace smoothcrf {

RegionGraph RegionGraph::grid(int width, int height, int num_labels) {
  require(width > 0 && height > 0, "grid dimensions must be positive");
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(width) * (height - 1) + static_cast<std::size_t>(height) * (width - 1));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int i = y * width + x;
      if (x + 1 < width) edges.push_back({i, i + 1});
      if (y + 1 < height) edges.push_back({i, i + width});
    }
  }
  RegionGraph g(width * height, num_labels, std::move(edges));
  g.grid_ = GridDims{width, height};
  return g;
}

RegionGraph RegionGraph::from_edges(int num_vars, int num_labels, std::vector<Edge> edges) {
  require(num_vars > 0, "graph needs at least one variable");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : edges) {
    require(e.first >= 0 && e.first < num_vars && e.second >= 0 && e.second < num_vars,
            "edge endpoint out of range");
    require(e.first != e.second, "self loops are not pairwise regions");
    require(seen.insert(std::minmax(e.first, e.second)).second, "duplicate edge");
  }
  return RegionGraph(num_vars, num_labels, std::move(edges));
}

RegionGraph::RegionGraph(int num_vars, int num_labels, std::vector<Edge> edges)
    : num_vars_(num_vars), num_labels_(num_labels), edges_(std::move(edges)) {
  require(num_labels >= 2, "need at least two labels");
  edge_children_.reserve(2 * edges_.size());
  std::vector<int> degree(static_cast<std::size_t>(num_vars_), 0);
  for (const auto& e : edges_) {
    edge_children_.push_back(e.first);
    edge_children_.push_back(e.second);
    ++degree[static_cast<std::size_t>(e.first)];
    ++degree[static_cast<std::size_t>(e.second)];
  }
  parent_offsets_.assign(static_cast<std::size_t>(num_vars_) + 1, 0);
  std::partial_sum(degree.begin(), degree.end(), parent_offsets_.begin() + 1);
  parents_.resize(static_cast<std::size_t>(parent_offsets_.back()));
  incidence_.resize(parents_.size());
  incidence_offsets_.assign(parent_offsets_.begin(), parent_offsets_.end());
  std::vector<int> fill(parent_offsets_.begin(), parent_offsets_.end() - 1);
  for (int e = 0; e < num_edges(); ++e) {
    const Edge& ed = edges_[static_cast<std::size_t>(e)];
    for (int side = 0; side < 2; ++side) {
      const int v = side == 0 ? ed.first : ed.second;
      const auto slot = static_cast<std::size_t>(fill[static_cast<std::size_t>(v)]++);
      parents_[slot] = edge_region(e);
      incidence_[slot] = {e, side};
    }
  }
}

void RegionGraph::check_region(int region) const {
  if (region < 0 || region >= num_regions())
    throw std::out_of_range("region index " + std::to_string(region) + " out of range");
}

std::span<const int> RegionGraph::children_of(int region) const {
  check_region(region);
  if (is_node(region)) return {};
  return std::span<const int>(edge_children_).subspan(2 * static_cast<std::size_t>(region - num_vars_), 2);
}

std::span<const int> RegionGraph::parents_of(int region) const {
  check_region(region);
  if (!is_node(region)) return {};
  const auto b = static_cast<std::size_t>(parent_offsets_[static_cast<std::size_t>(region)]);
  const auto e = static_cast<std::size_t>(parent_offsets_[static_cast<std::size_t>(region) + 1]);
  return std::span<const int>(parents_).subspan(b, e - b);
}

int RegionGraph::config_count(int region) const {
  check_region(region);
  return is_node(region) ? num_labels_ : num_labels_ * num_labels_;
}

Eigen::Index RegionGraph::table_size() const {
  const Eigen::Index L = num_labels_;
  return num_vars_ * L + static_cast<Eigen::Index>(num_edges()) * L * L;
}

bool RegionGraph::is_forest() const {
  std::vector<int> parent(static_cast<std::size_t>(num_vars_));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (const auto& e : edges_) {
    const int a = find(e.first), b = find(e.second);
    if (a == b) return false;
    parent[static_cast<std::size_t>(a)] = b;
  }
  return true;
}

int region_config(const RegionGraph& g, int region, const Labeling& y) {
  if (g.is_node(region)) return y[static_cast<std::size_t>(region)];
  const Edge& e = g.edge(region - g.num_vars());
  return g.num_labels() * y[static_cast<std::size_t>(e.first)] + y[static_cast<std::size_t>(e.second)];
}

}  // namespace smoothcrf
