#pragma once

// Synthetic data: the starlike annuli classification set, concentric annuli in
// any dimension, and regression sets with a known optimal risk.

#include "dlab/dataset.hpp"
#include "dlab/dynamics.hpp"
#include "dlab/field.hpp"

#include <cstdint>
#include <optional>

namespace dlab {

struct StarlikeSpec {
  double r1 = 1.0;
  double r2 = 1.5;
  double r3 = 3.0;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 1;
  int augment_dims = 0;

  void validate() const;
};

/// Class of a planar point: -1 inside r <= r1 (2 + cos 5t), +1 on
/// r2 (2 + cos 5t) <= r <= r3 (2 + cos 5t), nothing in the gap or outside.
std::optional<int> starlike_class(double x, double y, const StarlikeSpec& spec);

/// Area-uniform samples of each region (rejection in the disk of radius 3 r3),
/// 50/50 balance, `augment_dims` zero coordinates appended.
LabeledDataset gen_starlike(const StarlikeSpec& spec);

/// Ball of radius r1 (label -1) and shell r2 <= |x| <= r3 (label +1) in R^d.
LabeledDataset gen_concentric(double r1, double r2, double r3, std::size_t n, Index d, std::uint64_t seed);

enum class RegressionKind { self_consistent, gaussian_linear };

struct RegressionOracleSpec {
  RegressionKind kind = RegressionKind::gaussian_linear;
  std::size_t n = 200;
  std::uint64_t seed = 1;
  Index dim = 2;
  double input_scale = 1.0;
  MatrixXd linear_map;  // gaussian_linear: y = linear_map x (identity if empty)
  // self_consistent: y = x(1) of this network
  Activation activation = Activation::tanh;
  std::optional<WeightVector> theta;
  FlowScheme scheme = FlowScheme::continuous();
};

/// Inputs are N(0, input_scale^2 I).
LabeledDataset gen_regression_oracle(const RegressionOracleSpec& spec);

struct DatasetMoments {
  std::vector<double> input;   // E|x|^k for k = 1..order
  std::vector<double> target;  // E|y|^k (regression only)
};

DatasetMoments sample_moments(const LabeledDataset& data, int order = 4);

}  // namespace dlab
