#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>

#include "smoothcrf/model.hpp"

namespace smoothcrf {

struct GenConfig {
  int num_train = 16;
  int num_test = 16;
  int width = 100;
  int height = 100;
  double blur_sigma = 10.0;
  std::uint64_t seed = 0;
};

/// Synthetic binary denoising data. Labels come from thresholding a blurred
/// uniform noise field at 0.5 (ties go to 1). Unary feature: U[0,.9] for
/// label 0, U[.1,1] for label 1. Pairwise feature: U[0,.8] when the two
/// labels agree, U[.2,1] otherwise. Both get a trailing constant 1.
std::pair<Dataset, Dataset> gen_denoising(const GenConfig& config);
Example denoising_example(int width, int height, double blur_sigma, std::uint64_t seed);

/// Separable Gaussian blur of a height x width field. The kernel is truncated
/// at ceil(3 sigma) and renormalized over in-bounds taps at the borders.
Matrix gaussian_blur(const Matrix& field, double sigma);

struct RgbImage {
  int width = 0;
  int height = 0;
  Matrix rgb;  // 3 x (width*height), row-major pixel order, values in [0,1]
};

struct ImageFeatures {
  Matrix unary;     // 6 x n: 1, R, G, B, x/W, y/H
  Matrix pairwise;  // 3 x m: 1, |rgb_i - rgb_j|, Sobel magnitude at the edge midpoint in [0,1]
};
ImageFeatures extract_image_features(const RgbImage& image);

/// Grid example from an image, with optional per-pixel labels.
Example image_example(const RgbImage& image, int num_labels, std::optional<Labeling> gold);

/// Line-oriented text format, see docs/formats.md.
void write_dataset(std::ostream& out, const Dataset& data);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data);
Dataset load_dataset(const std::string& path);

struct GrayImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  std::vector<int> pixels;  // row-major
};

/// Binary P5 graymap with intensity label * 255 / (L - 1).
void write_label_image(const std::string& path, const Labeling& labels, GridDims dims, int num_labels);
GrayImage read_pgm(const std::string& path);
/// P6 (binary) or P3 (ascii) pixmap.
RgbImage read_ppm(const std::string& path);
void write_ppm(const std::string& path, const RgbImage& image);
/// round(v * (L - 1) / maxval) per pixel.
Labeling labels_from_gray(const GrayImage& image, int num_labels);

}  // namespace smoothcrf
