#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace dlab {

/// Finite empirical measure of (x, y) pairs. Regression sets carry target
/// vectors; classification sets carry integer labels (+1 / -1) instead.
struct LabeledDataset {
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> targets;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
  bool is_classification() const { return !labels.empty(); }
  Eigen::Index input_dim() const { return inputs.empty() ? 0 : inputs.front().size(); }

  /// Throws std::invalid_argument on ragged, mismatched or non-finite data.
  void validate() const;

  LabeledDataset subset(const std::vector<std::size_t>& rows) const;
};

/// Header x_0..x_{d-1}, then y_0..y_{d-1} or a single `label` column.
void write_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path);
LabeledDataset read_dataset_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace dlab
