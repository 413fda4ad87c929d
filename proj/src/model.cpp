#include "smoothcrf/model.hpp"

namespace smoothcrf {

void Dataset::validate() const {
  require(num_labels >= 2, "dataset needs at least two labels");
  for (std::size_t k = 0; k < examples.size(); ++k) {
    const Example& ex = examples[k];
    const std::string where = "example " + std::to_string(k) + ": ";
    require(ex.graph.num_labels() == num_labels, where + "label count differs from dataset");
    require(ex.unary.rows() == d_unary && ex.unary.cols() == ex.graph.num_vars(),
            where + "unary feature shape mismatch");
    require(ex.pairwise.rows() == d_pairwise && ex.pairwise.cols() == ex.graph.num_edges(),
            where + "pairwise feature shape mismatch");
    if (ex.gold) {
      require(static_cast<int>(ex.gold->size()) == ex.graph.num_vars(), where + "label count mismatch");
      for (int y : *ex.gold) require(y >= 0 && y < num_labels, where + "label out of range");
    }
  }
}

std::size_t Dataset::num_variables() const {
  std::size_t n = 0;
  for (const auto& ex : examples) n += static_cast<std::size_t>(ex.graph.num_vars());
  return n;
}

Model Model::zero(int num_labels, int d_unary, int d_pairwise, double epsilon) {
  Model m;
  m.epsilon = epsilon;
  m.num_labels = num_labels;
  m.d_unary = d_unary;
  m.d_pairwise = d_pairwise;
  m.unary = Classifier::zero(num_labels, d_unary);
  m.pairwise = Classifier::zero(num_labels * num_labels, d_pairwise);
  return m;
}

void Model::validate() const {
  require(epsilon > 0.0, "model epsilon must be positive");
  require(unary.num_labels() == num_labels && unary.dim() == d_unary, "unary classifier shape mismatch");
  require(pairwise.num_labels() == num_labels * num_labels && pairwise.dim() == d_pairwise,
          "pairwise classifier shape mismatch");
}

ScoreTables Model::scores(const Example& example) const {
  const RegionGraph& g = example.graph;
  require(g.num_labels() == num_labels, "example label count does not match model");
  require(example.unary.rows() == d_unary, "unary feature dimension does not match model");
  require(example.pairwise.rows() == d_pairwise, "pairwise feature dimension does not match model");
  ScoreTables out(g);
  const Eigen::Index node_block = static_cast<Eigen::Index>(g.num_vars()) * num_labels;
  const Matrix u = unary.predict_batch(example.unary);
  out.values.head(node_block) = Eigen::Map<const Vector>(u.data(), u.size());
  if (g.num_edges() > 0) {
    const Matrix v = pairwise.predict_batch(example.pairwise);
    out.values.tail(v.size()) = Eigen::Map<const Vector>(v.data(), v.size());
  }
  return out;
}

}  // namespace smoothcrf
