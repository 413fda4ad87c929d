#include <cmath>
#include <random>

#include "smoothcrf/data.hpp"
#include "smoothcrf/random.hpp"

namespace smoothcrf {
namespace {

// Renormalized truncated Gaussian along one axis of a column-major matrix.
Matrix blur_columns(const Matrix& in, const Vector& kernel) {
  const auto radius = (kernel.size() - 1) / 2;
  const Eigen::Index n = in.rows();
  Matrix out(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - radius);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + radius);
    const auto w = kernel.segment(lo - i + radius, hi - lo + 1);
    out.row(i) = (w.transpose() * in.middleRows(lo, hi - lo + 1)) / w.sum();
  }
  return out;
}

}  // namespace

Matrix gaussian_blur(const Matrix& field, double sigma) {
  require(sigma > 0.0, "blur sigma must be positive");
  const auto radius = static_cast<Eigen::Index>(std::ceil(3.0 * sigma));
  Vector kernel(2 * radius + 1);
  for (Eigen::Index k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-static_cast<double>(k * k) / (2.0 * sigma * sigma));
  const Matrix vertical = blur_columns(field, kernel);
  return blur_columns(vertical.transpose(), kernel).transpose();
}

Example denoising_example(int width, int height, double blur_sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };

  Matrix noise(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) noise(y, x) = unit(rng);
  const Matrix smooth = gaussian_blur(noise, blur_sigma);

  RegionGraph g = RegionGraph::grid(width, height, 2);
  Labeling gold(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) gold[static_cast<std::size_t>(y * width + x)] = smooth(y, x) >= 0.5 ? 1 : 0;

  Matrix unary(2, g.num_vars());
  for (int i = 0; i < g.num_vars(); ++i) {
    unary(0, i) = gold[static_cast<std::size_t>(i)] == 0 ? uniform(0.0, 0.9) : uniform(0.1, 1.0);
    unary(1, i) = 1.0;
  }
  Matrix pairwise(2, g.num_edges());
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const bool same = gold[static_cast<std::size_t>(ed.first)] == gold[static_cast<std::size_t>(ed.second)];
    pairwise(0, e) = same ? uniform(0.0, 0.8) : uniform(0.2, 1.0);
    pairwise(1, e) = 1.0;
  }
  return Example{std::move(g), std::move(unary), std::move(pairwise), std::move(gold)};
}

std::pair<Dataset, Dataset> gen_denoising(const GenConfig& config) {
  require(config.width > 0 && config.height > 0, "image size must be positive");
  require(config.num_train >= 0 && config.num_test >= 0, "example counts must be nonnegative");
  auto make = [&](int count, std::uint64_t stream) {
    Dataset d;
    d.num_labels = 2;
    d.d_unary = 2;
    d.d_pairwise = 2;
    d.examples.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k)
      d.examples.push_back(denoising_example(config.width, config.height, config.blur_sigma,
                                             derive_seed(derive_seed(config.seed, stream), static_cast<std::uint64_t>(k))));
    return d;
  };
  return {make(config.num_train, 0), make(config.num_test, 1)};
}

}  // namespace smoothcrf
