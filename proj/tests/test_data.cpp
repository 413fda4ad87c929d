#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "smoothcrf/data.hpp"

using namespace smoothcrf;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("smoothcrf-test-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

bool same_dataset(const Dataset& a, const Dataset& b) {
  if (a.num_labels != b.num_labels || a.d_unary != b.d_unary || a.d_pairwise != b.d_pairwise ||
      a.examples.size() != b.examples.size())
    return false;
  for (std::size_t k = 0; k < a.examples.size(); ++k) {
    const auto& x = a.examples[k];
    const auto& y = b.examples[k];
    if (x.graph.grid_dims()->width != y.graph.grid_dims()->width ||
        x.graph.grid_dims()->height != y.graph.grid_dims()->height || x.unary != y.unary ||
        x.pairwise != y.pairwise || x.gold != y.gold)
      return false;
  }
  return true;
}

Dataset tiny_dataset() {
  Dataset d;
  d.num_labels = 3;
  d.d_unary = 2;
  d.d_pairwise = 1;
  const auto g = RegionGraph::grid(2, 2, 3);
  Matrix u(2, 4);
  u << 0.1, 1.0 / 3.0, -2.5e-300, 7.0, 1e300, 0.0, -0.0, 3.141592653589793;
  Matrix p(1, 4);
  p << 0.25, 1e-17, 2.0, -1.5;
  d.examples.push_back(Example{g, u, p, Labeling{0, 2, 1, 1}});
  d.examples.push_back(Example{g, u * 2.0, p, std::nullopt});
  return d;
}

}  // namespace

TEST_CASE("generator feature supports") {
  GenConfig cfg;
  cfg.num_train = 2;
  cfg.num_test = 1;
  cfg.width = 40;
  cfg.height = 30;
  cfg.seed = 3;
  const auto [train, test] = gen_denoising(cfg);
  CHECK(train.examples.size() == 2);
  CHECK(test.examples.size() == 1);
  CHECK(train.d_unary == 2);
  CHECK(train.d_pairwise == 2);
  train.validate();
  for (const auto* d : {&train, &test}) {
    for (const auto& ex : d->examples) {
      const auto& y = *ex.gold;
      for (int i = 0; i < ex.graph.num_vars(); ++i) {
        const double phi = ex.unary(0, i);
        CHECK(phi >= 0.0);
        CHECK(phi <= 1.0);
        if (y[static_cast<std::size_t>(i)] == 0) CHECK(phi <= 0.9);
        else CHECK(phi >= 0.1);
        CHECK(ex.unary(1, i) == 1.0);
      }
      for (int e = 0; e < ex.graph.num_edges(); ++e) {
        const Edge& ed = ex.graph.edge(e);
        const double phi = ex.pairwise(0, e);
        if (y[static_cast<std::size_t>(ed.first)] == y[static_cast<std::size_t>(ed.second)]) CHECK(phi <= 0.8);
        else CHECK(phi >= 0.2);
        CHECK(ex.pairwise(1, e) == 1.0);
      }
    }
  }
}

TEST_CASE("generator default scale and determinism") {
  GenConfig cfg;
  CHECK(cfg.num_train == 16);
  CHECK(cfg.num_test == 16);
  CHECK(cfg.width == 100);
  CHECK(cfg.height == 100);
  CHECK(cfg.blur_sigma == 10.0);
  cfg.num_train = 1;
  cfg.num_test = 1;
  cfg.width = 20;
  cfg.height = 20;
  const auto a = gen_denoising(cfg);
  const auto b = gen_denoising(cfg);
  CHECK(same_dataset(a.first, b.first));
  CHECK(same_dataset(a.second, b.second));
  CHECK_FALSE(same_dataset(a.first, a.second));
}

TEST_CASE("without blur the labels are fair coins") {
  const auto ex = denoising_example(100, 100, 1e-3, 12345);
  double ones = 0;
  for (int y : *ex.gold) ones += y;
  CHECK(ones / 10000.0 == Approx(0.5).epsilon(0.04));
}

TEST_CASE("blur preserves constants and impulses") {
  const Matrix constant = Matrix::Constant(9, 13, 0.37);
  CHECK((gaussian_blur(constant, 2.0).array() - 0.37).abs().maxCoeff() <= 1e-12);

  Matrix impulse = Matrix::Zero(15, 15);
  impulse(7, 7) = 1.0;
  const Matrix out = gaussian_blur(impulse, 1.0);
  CHECK(out.sum() == Approx(1.0).epsilon(1e-9));
  CHECK((out - out.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((out - out.rowwise().reverse()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_THROWS_AS(gaussian_blur(impulse, 0.0), std::invalid_argument);
}

TEST_CASE("separable blur equals direct 2-d convolution") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  const Matrix field = Matrix::NullaryExpr(8, 8, [&] { return u(rng); });
  for (double sigma : {0.5, 1.0, 3.0})
    CHECK((gaussian_blur(field, sigma) - testing::direct_blur(field, sigma)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("blur preserves the mean of interior-supported fields") {
  // Border renormalization redistributes mass near the edges, so the mean is
  // preserved only when the field vanishes within two kernel radii of the
  // border (one radius per separable pass).
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u;
  Matrix field = Matrix::Zero(40, 40);
  field.block(13, 13, 14, 14) = Matrix::NullaryExpr(14, 14, [&] { return u(rng); });
  CHECK(gaussian_blur(field, 2.0).mean() == Approx(field.mean()).epsilon(1e-9));
}

TEST_CASE("image features") {
  RgbImage gray{4, 3, Matrix::Constant(3, 12, 0.5)};
  const auto f = extract_image_features(gray);
  CHECK(f.unary.rows() == 6);
  CHECK(f.pairwise.rows() == 3);
  CHECK(f.pairwise.row(1).isZero());
  CHECK(f.pairwise.row(2).isZero());
  CHECK(f.pairwise.row(0).isOnes());
  CHECK(f.unary(4, 0) == 0.0);
  CHECK(f.unary(5, 0) == 0.0);
  CHECK(f.unary(4, 5) == Approx(0.25));
  CHECK(f.unary(5, 5) == Approx(1.0 / 3.0));

  // Vertical step between columns 2 and 3 of a 6x3 image.
  RgbImage step{6, 3, Matrix::Zero(3, 18)};
  for (int y = 0; y < 3; ++y)
    for (int x = 3; x < 6; ++x) step.rgb.col(y * 6 + x).setOnes();
  const auto s = extract_image_features(step);
  const auto g = RegionGraph::grid(6, 3, 2);
  double crossing = -1.0, far = -1.0;
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const int x0 = ed.first % 6, x1 = ed.second % 6;
    if (x0 == 2 && x1 == 3) {
      crossing = s.pairwise(2, e);
      CHECK(s.pairwise(1, e) == Approx(std::sqrt(3.0)));
    }
    if (x1 <= 1) far = std::max(far, s.pairwise(2, e));
  }
  // Hand-computed stencil: gx = 4 at both sides of the step, gy = 0.
  CHECK(crossing == Approx(4.0 / (4.0 * std::sqrt(2.0))));
  CHECK(crossing == Approx(s.pairwise.row(2).maxCoeff()));
  CHECK(far == 0.0);
  CHECK_THROWS(extract_image_features(RgbImage{1, 5, Matrix::Zero(3, 5)}));
}

TEST_CASE("dataset text round trip is exact") {
  const auto d = tiny_dataset();
  std::stringstream ss;
  write_dataset(ss, d);
  CHECK(same_dataset(read_dataset(ss), d));
}

TEST_CASE("full-scale dataset round trip") {
  const auto [train, test] = gen_denoising(GenConfig{});
  const auto dir = scratch_dir("roundtrip");
  save_dataset((dir / "train.txt").string(), train);
  CHECK(same_dataset(load_dataset((dir / "train.txt").string()), train));
  CHECK(train.num_variables() == 160000);
  fs::remove_all(dir);
}

TEST_CASE("dataset parse errors") {
  std::stringstream ss;
  write_dataset(ss, tiny_dataset());
  const std::string text = ss.str();

  SUBCASE("truncated") {
    const auto cut = text.substr(0, text.rfind("example 1"));
    std::istringstream in(cut + "example 1 2 2\n");
    try {
      read_dataset(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("example 1") != std::string::npos);
      CHECK(e.line() > 0);
    }
  }
  SUBCASE("bad version") {
    std::istringstream in("smoothcrf-dataset 9\n");
    CHECK_THROWS_AS(read_dataset(in), ParseError);
  }
  SUBCASE("wrong feature count") {
    auto bad = text;
    bad.replace(bad.find("\nu "), 3, "\nu 1 ");
    std::istringstream in(bad);
    try {
      read_dataset(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 4);
    }
  }
  SUBCASE("garbage number") {
    auto bad = text;
    bad.replace(bad.find("\np "), 3, "\np x");
    std::istringstream in(bad);
    CHECK_THROWS_AS(read_dataset(in), ParseError);
  }
  SUBCASE("missing file names the path") {
    CHECK_THROWS_AS(load_dataset("/nonexistent/data.txt"), std::runtime_error);
  }
}

TEST_CASE("label images") {
  const auto dir = scratch_dir("pgm");
  const auto path = (dir / "a.pgm").string();
  SUBCASE("all zero is black") {
    write_label_image(path, Labeling(6, 0), {3, 2}, 2);
    int w, h;
    const auto px = testing::reference_read_p5(path, w, h);
    CHECK(w == 3);
    CHECK(h == 2);
    for (int v : px) CHECK(v == 0);
  }
  SUBCASE("checkerboard") {
    Labeling y(16);
    for (int i = 0; i < 16; ++i) y[static_cast<std::size_t>(i)] = ((i % 4) + (i / 4)) % 2;
    write_label_image(path, y, {4, 4}, 2);
    int w, h;
    const auto px = testing::reference_read_p5(path, w, h);
    for (int i = 0; i < 16; ++i) CHECK(px[static_cast<std::size_t>(i)] == 255 * y[static_cast<std::size_t>(i)]);
    const auto back = read_pgm(path);
    CHECK(labels_from_gray(back, 2) == y);
  }
  SUBCASE("multi-label intensities") {
    write_label_image(path, {0, 1, 2, 3}, {2, 2}, 4);
    int w, h;
    CHECK(testing::reference_read_p5(path, w, h) == std::vector<int>{0, 85, 170, 255});
  }
  fs::remove_all(dir);
}

TEST_CASE("pixmap round trip and ascii variant") {
  const auto dir = scratch_dir("ppm");
  RgbImage img{3, 2, Matrix(3, 6)};
  for (int i = 0; i < 18; ++i) img.rgb.data()[i] = (i * 15) / 255.0;
  write_ppm((dir / "a.ppm").string(), img);
  const auto back = read_ppm((dir / "a.ppm").string());
  CHECK(back.width == 3);
  CHECK((back.rgb - img.rgb).cwiseAbs().maxCoeff() < 1e-12);

  std::ofstream((dir / "b.ppm").string()) << "P3\n# comment\n2 1\n255\n255 0 0  0 0 255\n";
  const auto ascii = read_ppm((dir / "b.ppm").string());
  CHECK(ascii.rgb(0, 0) == 1.0);
  CHECK(ascii.rgb(2, 1) == 1.0);

  std::ofstream((dir / "c.ppm").string()) << "P6\n2 2\n255\nabc";
  CHECK_THROWS(read_ppm((dir / "c.ppm").string()));
  fs::remove_all(dir);
}

TEST_CASE("image example") {
  RgbImage img{3, 3, Matrix::Zero(3, 9)};
  const auto ex = image_example(img, 2, Labeling(9, 1));
  CHECK(ex.graph.num_edges() == 12);
  CHECK(ex.unary.cols() == 9);
  CHECK_THROWS(image_example(img, 2, Labeling(4, 1)));
}
