#include <cmath>

#include "smoothcrf/data.hpp"

namespace smoothcrf {

ImageFeatures extract_image_features(const RgbImage& image) {
  const int W = image.width, H = image.height;
  require(W >= 2 && H >= 2, "image must be at least 2x2");
  require(image.rgb.rows() == 3 && image.rgb.cols() == static_cast<Eigen::Index>(W) * H, "malformed RGB image");

  const RegionGraph g = RegionGraph::grid(W, H, 2);
  ImageFeatures f;
  f.unary.resize(6, g.num_vars());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const int i = y * W + x;
      f.unary(0, i) = 1.0;
      f.unary.block(1, i, 3, 1) = image.rgb.col(i);
      f.unary(4, i) = static_cast<double>(x) / W;
      f.unary(5, i) = static_cast<double>(y) / H;
    }
  }

  // Sobel on intensity with clamped borders; the largest possible magnitude
  // for intensities in [0,1] is 4*sqrt(2).
  const Vector gray = image.rgb.colwise().mean().transpose();
  auto at = [&](int x, int y) {
    x = std::clamp(x, 0, W - 1);
    y = std::clamp(y, 0, H - 1);
    return gray[y * W + x];
  };
  Vector sobel(g.num_vars());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
      sobel[y * W + x] = std::sqrt(gx * gx + gy * gy) / (4.0 * std::sqrt(2.0));
    }
  }

  f.pairwise.resize(3, g.num_edges());
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    f.pairwise(0, e) = 1.0;
    f.pairwise(1, e) = (image.rgb.col(ed.first) - image.rgb.col(ed.second)).norm();
    f.pairwise(2, e) = 0.5 * (sobel[ed.first] + sobel[ed.second]);
  }
  return f;
}

Example image_example(const RgbImage& image, int num_labels, std::optional<Labeling> gold) {
  ImageFeatures f = extract_image_features(image);
  if (gold) require(static_cast<int>(gold->size()) == image.width * image.height, "label image size mismatch");
  return Example{RegionGraph::grid(image.width, image.height, num_labels), std::move(f.unary), std::move(f.pairwise),
                 std::move(gold)};
}

}  // namespace smoothcrf
