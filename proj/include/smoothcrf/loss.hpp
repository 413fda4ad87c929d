#pragma once

#include "smoothcrf/inference.hpp"

namespace smoothcrf {

/// Hamming loss tables: node tables are 1{y != gold}, edge tables are zero.
LossTables hamming_tables(const RegionGraph& g, const Labeling& gold);

/// theta = eps * g + Delta, elementwise.
Potentials build_theta(const RegionGraph& g, const ScoreTables& scores, const LossTables& loss, double eps);

/// theta = eps * g, for inference without loss augmentation.
Potentials build_theta(const RegionGraph& g, const ScoreTables& scores, double eps);

/// F(x, y) = sum_alpha eps * g_alpha(y_alpha).
double energy(const RegionGraph& g, const ScoreTables& scores, const Labeling& y, double eps);

/// sum_alpha log |y_alpha|.
double entropy_cap(const RegionGraph& g);

/// -F(x, gold) + A(lambda, theta) with lambda obtained by running message
/// passing from zero (or from *warm when given) under `budget`.
double smoothed_loss(const RegionGraph& g, const Labeling& gold, const ScoreTables& scores, double eps,
                     const SmoothingConfig& budget, Messages* warm = nullptr);

}  // namespace smoothcrf
