#include "smoothcrf/serialize.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace smoothcrf {
namespace {

constexpr std::uint64_t kClassifierVersion = 1;
constexpr std::uint64_t kModelVersion = 1;
constexpr std::array<char, 8> kModelMagic = {'S', 'C', 'R', 'F', 'M', 'O', 'D', 'L'};
constexpr std::uint64_t kMaxCount = std::uint64_t{1} << 32;

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes;
  for (int b = 0; b < 8; ++b) bytes[static_cast<std::size_t>(b)] = static_cast<char>((v >> (8 * b)) & 0xff);
  out.write(bytes.data(), 8);
}

void put_i64(std::ostream& out, std::int64_t v) { put_u64(out, static_cast<std::uint64_t>(v)); }
void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes;
  if (!in.read(reinterpret_cast<char*>(bytes.data()), 8)) throw ParseError("unexpected end of model data");
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(b)]) << (8 * b);
  return v;
}

std::int64_t get_i64(std::istream& in) { return static_cast<std::int64_t>(get_u64(in)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::uint64_t get_count(std::istream& in, const char* what) {
  const auto v = get_u64(in);
  if (v > kMaxCount) throw ParseError(std::string("implausible ") + what + " in model data");
  return v;
}

void put_row_major(std::ostream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put_f64(out, m(r, c));
}

Matrix get_row_major(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get_f64(in);
  return m;
}

std::uint64_t kind_tag(OracleKind k) { return static_cast<std::uint64_t>(k); }

}  // namespace

void write_classifier(std::ostream& out, const Classifier& f) {
  put_u64(out, kClassifierVersion);
  put_u64(out, kind_tag(f.kind()));
  put_u64(out, static_cast<std::uint64_t>(f.num_labels()));
  put_u64(out, static_cast<std::uint64_t>(f.dim()));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, ConstantModel>) {
          for (Eigen::Index y = 0; y < m.offsets.size(); ++y) put_f64(out, m.offsets[y]);
        } else if constexpr (std::is_same_v<T, LinearModel>) {
          put_row_major(out, m.weights);
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          put_u64(out, static_cast<std::uint64_t>(m.hidden.rows()));
          put_row_major(out, m.hidden);
          put_row_major(out, m.output);
        } else if constexpr (std::is_same_v<T, BoostedTrees>) {
          put_u64(out, static_cast<std::uint64_t>(m.rounds));
          put_u64(out, m.trees.size());
          for (const auto& t : m.trees) {
            put_u64(out, static_cast<std::uint64_t>(t.label));
            put_u64(out, t.nodes.size());
            for (const auto& n : t.nodes) {
              put_i64(out, n.feature);
              put_f64(out, n.threshold);
              put_i64(out, n.left);
              put_i64(out, n.right);
              put_f64(out, n.value);
            }
          }
        }
      },
      f.model());
}

Classifier read_classifier(std::istream& in) {
  const auto version = get_u64(in);
  if (version != kClassifierVersion) throw ParseError("unsupported classifier version " + std::to_string(version));
  const auto tag = get_u64(in);
  if (tag > 4) throw ParseError("unknown classifier kind tag " + std::to_string(tag));
  const auto L = static_cast<int>(get_count(in, "label count"));
  const auto d = static_cast<int>(get_count(in, "feature dimension"));
  switch (static_cast<OracleKind>(tag)) {
    case OracleKind::Zero:
      return Classifier::zero(L, d);
    case OracleKind::Constant: {
      Vector c(L);
      for (int y = 0; y < L; ++y) c[y] = get_f64(in);
      return Classifier::constant(std::move(c), d);
    }
    case OracleKind::Linear:
      return Classifier::linear(get_row_major(in, L, d));
    case OracleKind::Mlp: {
      const auto h = static_cast<Eigen::Index>(get_count(in, "hidden width"));
      Matrix U = get_row_major(in, h, d);
      Matrix W = get_row_major(in, L, h);
      return Classifier::mlp(std::move(U), std::move(W));
    }
    case OracleKind::Boost: {
      BoostedTrees bt;
      bt.rounds = static_cast<int>(get_count(in, "round count"));
      const auto count = get_count(in, "tree count");
      bt.trees.resize(count);
      for (auto& t : bt.trees) {
        t.label = static_cast<int>(get_count(in, "tree label"));
        const auto nodes = get_count(in, "node count");
        if (nodes == 0) throw ParseError("empty tree in model data");
        t.nodes.resize(nodes);
        for (auto& n : t.nodes) {
          n.feature = static_cast<int>(get_i64(in));
          n.threshold = get_f64(in);
          n.left = static_cast<int>(get_i64(in));
          n.right = static_cast<int>(get_i64(in));
          n.value = get_f64(in);
        }
        const auto size = static_cast<int>(t.nodes.size());
        for (int k = 0; k < size; ++k) {
          const auto& n = t.nodes[static_cast<std::size_t>(k)];
          if (n.feature >= d) throw ParseError("tree split feature out of range");
          // Preorder: children always follow their parent.
          if (n.feature >= 0 && (n.left <= k || n.left >= size || n.right <= k || n.right >= size))
            throw ParseError("tree child index out of range");
        }
      }
      return Classifier::boosted(L, d, std::move(bt));
    }
  }
  throw ParseError("unknown classifier kind");
}

void write_model(std::ostream& out, const Model& model) {
  out.write(kModelMagic.data(), kModelMagic.size());
  put_u64(out, kModelVersion);
  put_f64(out, model.epsilon);
  put_u64(out, static_cast<std::uint64_t>(model.num_labels));
  put_u64(out, static_cast<std::uint64_t>(model.d_unary));
  put_u64(out, static_cast<std::uint64_t>(model.d_pairwise));
  write_classifier(out, model.unary);
  write_classifier(out, model.pairwise);
}

Model read_model(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kModelMagic) throw ParseError("not a model file (bad magic)");
  const auto version = get_u64(in);
  if (version != kModelVersion) throw ParseError("unsupported model version " + std::to_string(version));
  Model m;
  m.epsilon = get_f64(in);
  m.num_labels = static_cast<int>(get_count(in, "label count"));
  m.d_unary = static_cast<int>(get_count(in, "unary dimension"));
  m.d_pairwise = static_cast<int>(get_count(in, "pairwise dimension"));
  m.unary = read_classifier(in);
  m.pairwise = read_classifier(in);
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  return m;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_model(out, model);
  if (!out) throw std::runtime_error("failed writing " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path);
  return read_model(in);
}

}  // namespace smoothcrf
