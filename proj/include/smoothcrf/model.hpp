#pragma once

#include <optional>
#include <vector>

#include "smoothcrf/graph.hpp"
#include "smoothcrf/oracle.hpp"

namespace smoothcrf {

/// One input/output pair: a graph with local features on every region.
struct Example {
  RegionGraph graph;
  Matrix unary;     // d_unary x num_vars
  Matrix pairwise;  // d_pairwise x num_edges
  std::optional<Labeling> gold;
};

struct Dataset {
  int num_labels = 2;
  int d_unary = 0;
  int d_pairwise = 0;
  std::vector<Example> examples;

  /// Throws std::invalid_argument on inconsistent dimensions or labels.
  void validate() const;
  std::size_t num_variables() const;
};

/// F(x, y) = sum_i eps * u(phi_i, y_i) + sum_ij eps * v(phi_ij, y_i, y_j).
struct Model {
  double epsilon = 0.1;
  int num_labels = 2;
  int d_unary = 0;
  int d_pairwise = 0;
  Classifier unary;
  Classifier pairwise;

  static Model zero(int num_labels, int d_unary, int d_pairwise, double epsilon);
  void validate() const;

  /// Unscaled classifier outputs g for every region of the example.
  ScoreTables scores(const Example& example) const;
};

}  // namespace smoothcrf
