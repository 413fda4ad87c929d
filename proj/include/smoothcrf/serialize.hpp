#pragma once

#include <iosfwd>
#include <string>

#include "smoothcrf/model.hpp"

namespace smoothcrf {

// Binary layout; every integer is an unsigned 64-bit and every real an
// IEEE-754 double, both little-endian.
//
// classifier:
//   u64 format version (1)
//   u64 kind   0 zero, 1 constant, 2 linear, 3 boost, 4 mlp
//   u64 labels L, u64 feature dim d
//   constant: L reals (offsets)
//   linear:   L*d reals, W row-major
//   mlp:      u64 h, h*d reals U row-major, L*h reals W row-major
//   boost:    u64 rounds, u64 tree count, then per tree:
//               u64 label, u64 node count, nodes in preorder as
//               (i64 feature or -1 for a leaf, real threshold,
//                i64 left, i64 right, real leaf value)
//
// model:
//   8 bytes magic "SCRFMODL", u64 version (1), real epsilon,
//   u64 L, u64 d_unary, u64 d_pairwise, unary classifier, pairwise classifier

void write_classifier(std::ostream& out, const Classifier& f);
Classifier read_classifier(std::istream& in);

void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace smoothcrf
