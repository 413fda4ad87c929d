// Command-line driver: dataset generation, training, the oracle matrix,
// prediction and image ingestion.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "smoothcrf/data.hpp"
#include "smoothcrf/parallel.hpp"
#include "smoothcrf/random.hpp"
#include "smoothcrf/serialize.hpp"
#include "smoothcrf/trainer.hpp"

namespace fs = std::filesystem;
using namespace smoothcrf;

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 1;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Matrix column headers in oracle order.
constexpr std::array<const char*, 5> kHeaders = {"Zero", "Const.", "Linear", "Boost.", "MLP"};

std::string kind_list() {
  std::string s;
  for (auto k : kAllKinds) s += (s.empty() ? "" : ", ") + std::string(kind_name(k));
  return s;
}

CLI::Validator oracle_kind() {
  return CLI::Validator(
      [](std::string& v) -> std::string {
        if (parse_kind(v)) return {};
        return "unknown oracle kind '" + v + "' (valid kinds: " + kind_list() + ")";
      },
      "KIND", "oracle kind");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

struct GenOptions {
  GenConfig gen;
  std::string out;
};

struct TrainOptions {
  std::string train_data, test_data, out;
  std::string unary = "linear", pairwise = "linear";
  int iters = 20;
  int mp_iters = 25;
  int test_mp_iters = 200;
  double eps = 0.1;
  std::uint64_t seed = 0;
  bool curve = true;
  int mlp_hidden = 32;
  int mlp_epochs = 5;
  int boost_rounds = 10;
  int boost_depth = 4;
};

TrainConfig to_config(const TrainOptions& o) {
  TrainConfig c = TrainConfig::defaults();
  c.epsilon = o.eps;
  c.outer_iters = o.iters;
  c.mp_iters = o.mp_iters;
  c.test_mp_iters = o.test_mp_iters;
  c.unary = *parse_kind(o.unary);
  c.pairwise = *parse_kind(o.pairwise);
  c.seed = o.seed;
  for (FitConfig* f : {&c.unary_fit, &c.pairwise_fit}) {
    f->mlp.hidden = o.mlp_hidden;
    f->mlp.epochs = o.mlp_epochs;
    f->boost.rounds = o.boost_rounds;
    f->boost.max_depth = o.boost_depth;
  }
  return c;
}

std::string manifest(const TrainOptions& o) {
  std::ostringstream m;
  m << "train-data = " << o.train_data << "\n"
    << "test-data = " << o.test_data << "\n"
    << "unary = " << o.unary << "\npairwise = " << o.pairwise << "\n"
    << "iters = " << o.iters << "\nmp-iters = " << o.mp_iters << "\ntest-mp-iters = " << o.test_mp_iters << "\n"
    << "eps = " << fmt(o.eps) << "\nseed = " << o.seed << "\n"
    << "mlp-hidden = " << o.mlp_hidden << "\nmlp-epochs = " << o.mlp_epochs << "\n"
    << "boost-rounds = " << o.boost_rounds << "\nboost-depth = " << o.boost_depth << "\n";
  return m.str();
}

void add_training_flags(CLI::App* cmd, TrainOptions& o) {
  cmd->add_option("--iters", o.iters, "outer iterations")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_option("--mp-iters", o.mp_iters, "message-passing sweeps after each oracle update")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--test-mp-iters", o.test_mp_iters, "sweeps at prediction time")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--eps", o.eps, "entropy weight")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--seed", o.seed, "seed for every random choice")->capture_default_str();
  cmd->add_option("--mlp-hidden", o.mlp_hidden, "MLP hidden units")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--mlp-epochs", o.mlp_epochs, "MLP epochs per update")->check(CLI::NonNegativeNumber)->capture_default_str();
  cmd->add_option("--boost-rounds", o.boost_rounds, "boosting rounds per update")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cmd->add_option("--boost-depth", o.boost_depth, "maximum tree depth")->check(CLI::PositiveNumber)->capture_default_str();
}

int cmd_gen(const GenOptions& o) {
  ensure_dir(o.out);
  const auto [train, test] = gen_denoising(o.gen);
  const fs::path dir(o.out);
  save_dataset((dir / "train.txt").string(), train);
  save_dataset((dir / "test.txt").string(), test);
  std::ostringstream m;
  m << "train = " << o.gen.num_train << "\ntest = " << o.gen.num_test << "\nwidth = " << o.gen.width
    << "\nheight = " << o.gen.height << "\nblur = " << fmt(o.gen.blur_sigma) << "\nseed = " << o.gen.seed
    << "\ntrain-file = train.txt\ntest-file = test.txt\n";
  write_text(dir / "manifest.txt", m.str());
  std::cout << "wrote " << train.examples.size() << " training and " << test.examples.size() << " test examples to "
            << o.out << "\n";
  return 0;
}

int cmd_train(const TrainOptions& o) {
  const Dataset train_set = load_dataset(o.train_data);
  const Dataset test_set = o.test_data.empty() ? Dataset{} : load_dataset(o.test_data);
  TrainConfig cfg = to_config(o);
  const bool have_test = !test_set.examples.empty();

  std::ofstream curve_file;
  if (!o.out.empty()) {
    ensure_dir(o.out);
    write_text(fs::path(o.out) / "manifest.txt", manifest(o));
    curve_file.open(fs::path(o.out) / "curve.csv");
    curve_file << "iteration,train_error,test_error\n";
  }
  // Without a curve only the final model is evaluated.
  cfg.track_train_error = o.curve;
  cfg.track_test_error = o.curve && have_test;
  auto on_point = [&](const CurvePoint& p) {
    if (!o.curve) return;
    std::cerr << "iteration " << p.iteration << " train=" << fmt(p.train_error) << " test=" << fmt(p.test_error)
              << "\n";
    if (curve_file.is_open()) curve_file << p.iteration << ',' << fmt(p.train_error) << ',' << fmt(p.test_error) << '\n'
                                         << std::flush;
  };
  TrainResult result = train(train_set, test_set, cfg, on_point);

  double train_error = result.curve.back().train_error;
  double test_error = result.curve.back().test_error;
  const SmoothingConfig eval = cfg.test_inference();
  if (!o.curve) {
    train_error = dataset_error(result.model, train_set, eval);
    test_error = have_test ? dataset_error(result.model, test_set, eval) : std::nan("");
    if (curve_file.is_open())
      curve_file << result.curve.back().iteration << ',' << fmt(train_error) << ',' << fmt(test_error) << '\n';
  }
  if (!o.out.empty()) save_model((fs::path(o.out) / "model.bin").string(), result.model);
  std::cout << "unary=" << o.unary << " pairwise=" << o.pairwise << " train=" << fmt(train_error)
            << " test=" << fmt(test_error) << "\n";
  return 0;
}

struct MatrixOptions {
  TrainOptions train;
  std::string out;
  bool parallel = false;
};

int cmd_matrix(const MatrixOptions& o) {
  const Dataset train_set = load_dataset(o.train.train_data);
  const Dataset test_set = load_dataset(o.train.test_data);
  constexpr std::size_t n = std::size(kAllKinds);
  std::vector<std::string> cell(n * n);
  std::mutex lock;

  auto flush = [&] {
    std::ostringstream csv;
    csv << "unary\\pairwise";
    for (auto h : kHeaders) csv << ',' << h;
    csv << '\n';
    for (std::size_t r = 0; r < n; ++r) {
      csv << kHeaders[r];
      for (std::size_t c = 0; c < n; ++c) csv << ',' << cell[r * n + c];
      csv << '\n';
    }
    if (!o.out.empty()) {
      const fs::path path(o.out);
      if (path.has_parent_path()) ensure_dir(path.parent_path().string());
      write_text(path.string() + ".tmp", csv.str());
      fs::rename(path.string() + ".tmp", path);
    }
    return csv.str();
  };

  auto run_cell = [&](std::size_t index) {
    TrainOptions t = o.train;
    t.unary = std::string(kind_name(kAllKinds[index / n]));
    t.pairwise = std::string(kind_name(kAllKinds[index % n]));
    t.seed = derive_seed(o.train.seed, index);
    TrainConfig cfg = to_config(t);
    cfg.track_train_error = false;
    cfg.track_test_error = false;
    const TrainResult result = train(train_set, test_set, cfg);
    const double err = dataset_error(result.model, test_set, cfg.test_inference());
    std::lock_guard guard(lock);
    cell[index] = fmt(err);
    flush();
    std::cerr << kHeaders[index / n] << '/' << kHeaders[index % n] << " test=" << cell[index] << "\n";
  };
  if (o.parallel) {
    parallel_for(n * n, run_cell);
  } else {
    for (std::size_t i = 0; i < n * n; ++i) run_cell(i);
  }
  std::cout << flush();
  return 0;
}

struct PredictOptions {
  std::string model, data, out;
  int test_mp_iters = 200;
};

int cmd_predict(const PredictOptions& o) {
  const Model model = load_model(o.model);
  const Dataset data = load_dataset(o.data);
  require(data.num_labels == model.num_labels && data.d_unary == model.d_unary && data.d_pairwise == model.d_pairwise,
          "dataset dimensions (labels " + std::to_string(data.num_labels) + ", unary " + std::to_string(data.d_unary) +
              ", pairwise " + std::to_string(data.d_pairwise) + ") do not match the model (labels " +
              std::to_string(model.num_labels) + ", unary " + std::to_string(model.d_unary) + ", pairwise " +
              std::to_string(model.d_pairwise) + ")");
  if (!o.out.empty()) ensure_dir(o.out);
  TrainConfig cfg;
  cfg.epsilon = model.epsilon;
  cfg.test_mp_iters = o.test_mp_iters;
  const SmoothingConfig eval = cfg.test_inference();

  std::vector<Labeling> preds(data.examples.size());
  const bool labeled = std::all_of(data.examples.begin(), data.examples.end(), [](const Example& e) { return e.gold; });
  double pooled = std::nan("");
  if (labeled) {
    pooled = dataset_error(model, data, eval, &preds);
  } else {
    parallel_for(preds.size(), [&](std::size_t k) { preds[k] = predict(model, data.examples[k], eval); });
  }
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const Example& ex = data.examples[k];
    if (!o.out.empty())
      write_label_image((fs::path(o.out) / ("pred_" + std::to_string(k) + ".pgm")).string(), preds[k],
                        *ex.graph.grid_dims(), model.num_labels);
    std::cout << "example " << k;
    if (ex.gold) std::cout << " error=" << fmt(univariate_error(preds[k], *ex.gold));
    std::cout << "\n";
  }
  if (labeled) std::cout << "mean=" << fmt(pooled) << "\n";
  return 0;
}

struct IngestOptions {
  std::vector<std::string> images, labels;
  int num_labels = 2;
  std::string out;
};

int cmd_ingest(const IngestOptions& o) {
  if (!o.labels.empty() && o.labels.size() != o.images.size())
    throw CLI::ValidationError("--labels", "expected one label image per input image");
  Dataset data;
  data.num_labels = o.num_labels;
  data.d_unary = 6;
  data.d_pairwise = 3;
  for (std::size_t k = 0; k < o.images.size(); ++k) {
    const RgbImage img = read_ppm(o.images[k]);
    std::optional<Labeling> gold;
    if (!o.labels.empty()) {
      const GrayImage lab = read_pgm(o.labels[k]);
      if (lab.width != img.width || lab.height != img.height)
        throw std::runtime_error(o.labels[k] + ": label image size differs from " + o.images[k]);
      gold = labels_from_gray(lab, o.num_labels);
    }
    data.examples.push_back(image_example(img, o.num_labels, std::move(gold)));
  }
  save_dataset(o.out, data);
  std::cout << "wrote " << data.examples.size() << " examples to " << o.out << "\n";
  return 0;
}

std::string config_file;

void add_config(CLI::App* cmd) {
  cmd->add_option("--config", config_file, "file of `key = value` lines (# starts a comment); flags override it")
      ->check(CLI::ExistingFile);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  return s.substr(a, s.find_last_not_of(" \t\r") + 1 - a);
}

// Rewrites `prog sub ... --config FILE ...` into `prog sub <file options> ...`
// so that later command-line flags win (options take their last value).
std::vector<std::string> expand_config(CLI::App& app, int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  if (args.empty()) return args;
  CLI::App* sub = app.get_subcommand_no_throw(args[0]);
  if (!sub) return args;
  std::string path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  std::vector<std::string> injected;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw CLI::ConversionError(where + ": expected `key = value`");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    if (key == "config" || !sub->get_option_no_throw("--" + key))
      throw CLI::ExtrasError(where + ": unknown key '" + key + "' for " + sub->get_name(), CLI::ExitCodes::ExtrasError);
    injected.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured prediction with entropy-smoothed message passing and logistic regression oracles"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "generate the synthetic denoising dataset");
  add_config(g);
  g->add_option("--train", gen.gen.num_train, "training images")->check(CLI::NonNegativeNumber)->capture_default_str();
  g->add_option("--test", gen.gen.num_test, "test images")->check(CLI::NonNegativeNumber)->capture_default_str();
  int size = 100;
  g->add_option("--size", size, "image width and height")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--blur", gen.gen.blur_sigma, "blur standard deviation")->check(CLI::PositiveNumber)->capture_default_str();
  g->add_option("--seed", gen.gen.seed, "generator seed")->capture_default_str();
  g->add_option("--out", gen.out, "output directory")->required();

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "train one unary/pairwise oracle combination");
  add_config(t);
  t->add_option("--train-data", tr.train_data, "training dataset")->required()->check(CLI::ExistingFile);
  t->add_option("--test-data", tr.test_data, "test dataset")->check(CLI::ExistingFile);
  t->add_option("--unary", tr.unary, "unary oracle: " + kind_list())->check(oracle_kind())->capture_default_str();
  t->add_option("--pairwise", tr.pairwise, "pairwise oracle: " + kind_list())->check(oracle_kind())->capture_default_str();
  t->add_option("--out", tr.out, "output directory for model.bin, curve.csv and manifest.txt");
  t->add_flag("--curve,!--no-curve", tr.curve, "evaluate errors after every iteration")->capture_default_str();
  add_training_flags(t, tr);

  MatrixOptions mx;
  auto* m = app.add_subcommand("matrix", "train every oracle combination and tabulate test errors");
  add_config(m);
  m->add_option("--train-data", mx.train.train_data, "training dataset")->required()->check(CLI::ExistingFile);
  m->add_option("--test-data", mx.train.test_data, "test dataset")->required()->check(CLI::ExistingFile);
  m->add_option("--out", mx.out, "CSV file, rewritten after every cell");
  m->add_flag("--parallel", mx.parallel, "train cells concurrently");
  add_training_flags(m, mx.train);

  PredictOptions pr;
  auto* p = app.add_subcommand("predict", "label a dataset with a trained model");
  add_config(p);
  p->add_option("--model", pr.model, "model file")->required()->check(CLI::ExistingFile);
  p->add_option("--data", pr.data, "dataset")->required()->check(CLI::ExistingFile);
  p->add_option("--out", pr.out, "directory for one graymap per example");
  p->add_option("--test-mp-iters", pr.test_mp_iters, "message-passing sweeps")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  IngestOptions in;
  auto* ig = app.add_subcommand("ingest", "build a dataset from pixmaps and optional label graymaps");
  add_config(ig);
  ig->add_option("--images", in.images, "input pixmaps (P6 or P3)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->required()->check(CLI::ExistingFile);
  ig->add_option("--labels", in.labels, "label graymaps, one per image")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)
      ->check(CLI::ExistingFile);
  ig->add_option("--num-labels", in.num_labels, "label count")->check(CLI::Range(2, 256))->capture_default_str();
  ig->add_option("--out", in.out, "dataset file to write")->required();

  try {
    std::vector<std::string> args = expand_config(app, argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (g->parsed()) {
      gen.gen.width = gen.gen.height = size;
      return cmd_gen(gen);
    }
    if (t->parsed()) return cmd_train(tr);
    if (m->parsed()) return cmd_matrix(mx);
    if (p->parsed()) return cmd_predict(pr);
    if (ig->parsed()) return cmd_ingest(in);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
