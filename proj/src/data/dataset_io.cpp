#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "smoothcrf/data.hpp"

namespace smoothcrf {
namespace {

constexpr std::string_view kMagic = "smoothcrf-dataset";
constexpr int kVersion = 1;

void put_real(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, res.ptr - buf);
}

void put_values(std::ostream& out, char tag, const Matrix& m) {
  out << tag;
  for (Eigen::Index k = 0; k < m.size(); ++k) {
    out << ' ';
    put_real(out, m.data()[k]);
  }
  out << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next non-empty, non-comment line split into tokens.
  bool next(std::vector<std::string_view>& tokens) {
    while (std::getline(in_, line_)) {
      ++number_;
      tokens.clear();
      std::string_view rest(line_);
      while (!rest.empty()) {
        const auto b = rest.find_first_not_of(" \t\r");
        if (b == std::string_view::npos) break;
        rest.remove_prefix(b);
        const auto e = rest.find_first_of(" \t\r");
        tokens.push_back(rest.substr(0, e));
        rest.remove_prefix(e == std::string_view::npos ? rest.size() : e);
      }
      if (tokens.empty() || tokens.front().starts_with('#')) continue;
      return true;
    }
    return false;
  }
  long line() const { return number_; }

 private:
  std::istream& in_;
  std::string line_;
  long number_ = 0;
};

template <typename T>
T parse_number(std::string_view tok, long line, const std::string& context) {
  T v{};
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError(context + ": bad number '" + std::string(tok) + "'", line);
  return v;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& data) {
  data.validate();
  out << kMagic << ' ' << kVersion << '\n';
  out << "labels " << data.num_labels << " unary " << data.d_unary << " pairwise " << data.d_pairwise << " examples "
      << data.examples.size() << '\n';
  for (std::size_t k = 0; k < data.examples.size(); ++k) {
    const Example& ex = data.examples[k];
    const auto& dims = ex.graph.grid_dims();
    require(dims.has_value(), "only grid examples can be saved");
    out << "example " << k << ' ' << dims->width << ' ' << dims->height << '\n';
    put_values(out, 'u', ex.unary);
    put_values(out, 'p', ex.pairwise);
    out << 'y';
    if (ex.gold) {
      for (int y : *ex.gold) out << ' ' << y;
    } else {
      out << " -";
    }
    out << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  LineReader reader(in);
  std::vector<std::string_view> tok;
  if (!reader.next(tok) || tok.size() != 2 || tok[0] != kMagic) throw ParseError("not a dataset file", reader.line());
  const int version = parse_number<int>(tok[1], reader.line(), "header");
  if (version != kVersion) throw ParseError("unsupported dataset version " + std::to_string(version), reader.line());
  if (!reader.next(tok) || tok.size() != 8 || tok[0] != "labels" || tok[2] != "unary" || tok[4] != "pairwise" ||
      tok[6] != "examples")
    throw ParseError("malformed dimension header", reader.line());
  Dataset data;
  data.num_labels = parse_number<int>(tok[1], reader.line(), "header");
  data.d_unary = parse_number<int>(tok[3], reader.line(), "header");
  data.d_pairwise = parse_number<int>(tok[5], reader.line(), "header");
  const auto count = parse_number<std::size_t>(tok[7], reader.line(), "header");
  if (data.num_labels < 2 || data.d_unary < 0 || data.d_pairwise < 0)
    throw ParseError("invalid dimensions in header", reader.line());

  for (std::size_t k = 0; k < count; ++k) {
    const std::string where = "example " + std::to_string(k);
    auto expect = [&](std::string_view tag) {
      if (!reader.next(tok)) throw ParseError(where + ": truncated, expected '" + std::string(tag) + "' record", reader.line() + 1);
      if (tok[0] != tag) throw ParseError(where + ": expected '" + std::string(tag) + "' record", reader.line());
    };
    expect("example");
    if (tok.size() != 4) throw ParseError(where + ": malformed example header", reader.line());
    if (parse_number<std::size_t>(tok[1], reader.line(), where) != k)
      throw ParseError(where + ": out-of-order example index", reader.line());
    const int width = parse_number<int>(tok[2], reader.line(), where);
    const int height = parse_number<int>(tok[3], reader.line(), where);
    if (width <= 0 || height <= 0) throw ParseError(where + ": nonpositive grid size", reader.line());
    RegionGraph g = RegionGraph::grid(width, height, data.num_labels);

    auto read_block = [&](std::string_view tag, Eigen::Index rows, Eigen::Index cols) {
      expect(tag);
      if (static_cast<Eigen::Index>(tok.size()) != rows * cols + 1)
        throw ParseError(where + ": '" + std::string(tag) + "' has " + std::to_string(tok.size() - 1) +
                             " values, expected " + std::to_string(rows * cols),
                         reader.line());
      Matrix m(rows, cols);
      for (Eigen::Index v = 0; v < m.size(); ++v)
        m.data()[v] = parse_number<double>(tok[static_cast<std::size_t>(v) + 1], reader.line(), where);
      return m;
    };
    Matrix unary = read_block("u", data.d_unary, g.num_vars());
    Matrix pairwise = read_block("p", data.d_pairwise, g.num_edges());
    expect("y");
    std::optional<Labeling> gold;
    if (!(tok.size() == 2 && tok[1] == "-")) {
      if (static_cast<int>(tok.size()) != g.num_vars() + 1)
        throw ParseError(where + ": label count mismatch", reader.line());
      Labeling y(static_cast<std::size_t>(g.num_vars()));
      for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = parse_number<int>(tok[i + 1], reader.line(), where);
        if (y[i] < 0 || y[i] >= data.num_labels) throw ParseError(where + ": label out of range", reader.line());
      }
      gold = std::move(y);
    }
    data.examples.push_back(Example{std::move(g), std::move(unary), std::move(pairwise), std::move(gold)});
  }
  if (reader.next(tok)) throw ParseError("trailing content after last example", reader.line());
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_dataset(out, data);
  if (!out) throw std::runtime_error("failed writing " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file " + path);
  try {
    return read_dataset(in);
  } catch (const ParseError& e) {
    throw ParseError(e.message(), e.line(), path);
  }
}

}  // namespace smoothcrf
