#pragma once

// Residual-network binary classifier on labelled point clouds: a shared-weight
// N-layer flow followed by a trainable affine readout, trained with momentum
// SGD on the logistic loss and scored by k-fold cross validation.

#include "dlab/dataset.hpp"
#include "dlab/risk.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dlab {

struct ClassifierSpec {
  int hidden = 16;
  Activation activation = Activation::relu;
  double learning_rate = 0.02;
  double momentum = 0.9;
  int iterations = 1500;
  int batch = 64;
  double init_scale = 0.1;
  double gamma = 0.001;
  double lam = 1.0;
  double rho0 = 0.0;
  double lambda_cap = 100.0;
  std::uint64_t seed = 1;
  int jobs = 1;

  void validate() const;
};

struct TrainedClassifier {
  Model model;
  VectorXd phi;
  int n_steps = 0;
  double lambda_cap = 100.0;  // truncation applied to phi
};

struct ClassificationMetrics {
  double cross_entropy = 0.0;
  double squared = 0.0;  // mean (y - tanh(score / 2))^2
  double accuracy = 0.0;
};

/// Trains at depth n_steps from a draw fixed by (spec.seed, stream).
TrainedClassifier train_classifier(const LabeledDataset& data, int n_steps, const ClassifierSpec& spec,
                                   std::uint64_t stream = 0);

ClassificationMetrics evaluate_classifier(const TrainedClassifier& clf, const LabeledDataset& data);

struct FoldOutcome {
  int fold = 0;
  bool ok = true;
  std::string error;
  ClassificationMetrics test;
};

struct CvRow {
  int n_steps = 0;
  std::vector<FoldOutcome> folds;
  ClassificationMetrics mean;
  ClassificationMetrics spread;  // sample standard deviation across successful folds
};

/// Fold i trains on every other fold and is scored on fold i. A failing fold is
/// recorded and skipped.
std::vector<CvRow> cross_validate(const LabeledDataset& data, const std::vector<int>& n_list, int folds,
                                  const ClassifierSpec& spec);

}  // namespace dlab
