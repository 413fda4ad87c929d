#include <cmath>
#include <fstream>

#include "smoothcrf/data.hpp"

namespace smoothcrf {
namespace {

// Netpbm header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in, const std::string& path) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw ParseError("truncated netpbm header", 0, path);
  return tok;
}

int header_int(std::istream& in, const std::string& path) {
  const std::string tok = header_token(in, path);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError("bad netpbm header value '" + tok + "'", 0, path);
  }
}

std::vector<int> read_samples(std::istream& in, std::size_t count, int maxval, bool binary, const std::string& path) {
  std::vector<int> out(count);
  if (binary) {
    const int width = maxval < 256 ? 1 : 2;
    for (auto& v : out) {
      int value = 0;
      for (int b = 0; b < width; ++b) {
        const int c = in.get();
        if (c == EOF) throw ParseError("truncated netpbm pixel data", 0, path);
        value = (value << 8) | c;
      }
      v = value;
    }
  } else {
    for (auto& v : out) v = header_int(in, path);
  }
  for (int v : out)
    if (v > maxval) throw ParseError("netpbm sample exceeds maxval", 0, path);
  return out;
}

}  // namespace

void write_label_image(const std::string& path, const Labeling& labels, GridDims dims, int num_labels) {
  require(num_labels >= 2, "need at least two labels");
  require(static_cast<long>(labels.size()) == static_cast<long>(dims.width) * dims.height,
          "labeling does not match image size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "P5\n" << dims.width << ' ' << dims.height << "\n255\n";
  for (int y : labels) {
    require(y >= 0 && y < num_labels, "label out of range");
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(y * 255.0 / (num_labels - 1)))));
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::string magic = header_token(in, path);
  if (magic != "P5" && magic != "P2") throw ParseError("not a graymap (magic " + magic + ")", 0, path);
  GrayImage img;
  img.width = header_int(in, path);
  img.height = header_int(in, path);
  img.maxval = header_int(in, path);
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535)
    throw ParseError("invalid graymap dimensions", 0, path);
  img.pixels = read_samples(in, static_cast<std::size_t>(img.width) * img.height, img.maxval, magic == "P5", path);
  return img;
}

RgbImage read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::string magic = header_token(in, path);
  if (magic != "P6" && magic != "P3") throw ParseError("not a pixmap (magic " + magic + ")", 0, path);
  RgbImage img;
  img.width = header_int(in, path);
  img.height = header_int(in, path);
  const int maxval = header_int(in, path);
  if (img.width <= 0 || img.height <= 0 || maxval <= 0 || maxval > 65535)
    throw ParseError("invalid pixmap dimensions", 0, path);
  const auto n = static_cast<std::size_t>(img.width) * img.height;
  const auto samples = read_samples(in, 3 * n, maxval, magic == "P6", path);
  img.rgb.resize(3, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      img.rgb(c, static_cast<Eigen::Index>(i)) = static_cast<double>(samples[3 * i + static_cast<std::size_t>(c)]) / maxval;
  return img;
}

void write_ppm(const std::string& path, const RgbImage& image) {
  require(image.rgb.rows() == 3 && image.rgb.cols() == static_cast<Eigen::Index>(image.width) * image.height,
          "malformed RGB image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (Eigen::Index i = 0; i < image.rgb.cols(); ++i)
    for (int c = 0; c < 3; ++c)
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(std::clamp(image.rgb(c, i), 0.0, 1.0) * 255.0))));
  if (!out) throw std::runtime_error("failed writing " + path);
}

Labeling labels_from_gray(const GrayImage& image, int num_labels) {
  require(num_labels >= 2, "need at least two labels");
  Labeling y(image.pixels.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = static_cast<int>(std::lround(static_cast<double>(image.pixels[i]) * (num_labels - 1) / image.maxval));
  return y;
}

}  // namespace smoothcrf
