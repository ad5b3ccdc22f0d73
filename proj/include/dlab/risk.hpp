#pragma once

// Penalized, truncated empirical risks of the ResNet / Neural ODE flow and
// their exact gradients.

#include "dlab/dataset.hpp"
#include "dlab/dynamics.hpp"
#include "dlab/field.hpp"

#include <cstdint>
#include <vector>

namespace dlab {

/// Quintic smoothstep 6s^5 - 15s^4 + 10s^3 clamped to [0, 1], and its derivatives.
double smoothstep5(double s);
double smoothstep5_prime(double s);

struct TruncationSpec {
  double lambda_cap = 10.0;
};

/// Radial clamp profile: rho(r) = r on [0, cap], 2 cap beyond 2 cap, C^2 and
/// monotone in between.
double truncation_radius(double r, const TruncationSpec& spec);
double truncation_radius_prime(double r, const TruncationSpec& spec);

struct Truncated {
  VectorXd theta;
  MatrixXd jac;  // symmetric
};

/// T(theta) = rho(|theta|) theta / |theta| with its exact Jacobian.
Truncated trunc(const VectorXd& theta, const TruncationSpec& spec);

struct RegularizerSpec {
  double gamma = 0.001;
  double lam = 1.0;   // quadratic coefficient, >= 1
  double rho0 = 1.0;  // H vanishes on the ball of this radius; 0 gives plain weight decay
};

struct RegularizerValue {
  double value = 0.0;
  VectorXd grad;
};

/// H(theta) = (1 - phi(|theta|)) lam |theta|^2 with a C^2 cutoff phi (gamma not applied).
RegularizerValue regularizer(const VectorXd& theta, const RegularizerSpec& spec);

enum class Loss { squared, logistic };

/// The trainable coordinates phi and the field weights theta = anchor + basis * phi.
/// Truncation and the penalty act on phi. An empty basis means phi = theta.
struct Model {
  VectorFieldSpec field;
  WeightVector anchor;
  MatrixXd basis;
  VectorXd readout;  // logistic loss scores readout . x(1) + readout_bias
  double readout_bias = 0.0;

  static Model full(const VectorFieldSpec& field);
  static Model slice(const VectorFieldSpec& field, const WeightVector& anchor, const MatrixXd& basis);

  Index param_count() const;
  WeightVector weights(const VectorXd& phi) const;
};

struct RiskConfig {
  Loss loss = Loss::squared;
  TruncationSpec truncation;
  RegularizerSpec regularizer;
  FlowScheme scheme = FlowScheme::continuous();
  int jobs = 1;
};

struct RiskEvaluation {
  double data_term = 0.0;
  double penalty = 0.0;  // gamma * H
  VectorXd grad;         // empty unless requested
  VectorXd readout_grad;  // logistic loss only: d/d readout, then d/d readout_bias
  double value() const { return data_term + penalty; }
};

RiskEvaluation evaluate_risk(const Model& model, const VectorXd& phi, const LabeledDataset& data,
                             const RiskConfig& cfg, bool with_grad);

double risk(const Model& model, const VectorXd& phi, const LabeledDataset& data, const RiskConfig& cfg);
VectorXd grad_risk(const Model& model, const VectorXd& phi, const LabeledDataset& data, const RiskConfig& cfg);

struct ConfinementRow {
  double radius = 0.0;
  double max_ratio = 0.0;  // max of -grad R . phi / (1 + |phi|^2) on the sphere
};

struct ConfinementReport {
  std::vector<ConfinementRow> rows;
  double overall_max = 0.0;
};

/// Samples phi uniformly on spheres of the given radii.
ConfinementReport confinement_probe(const Model& model, const LabeledDataset& data, const RiskConfig& cfg,
                                    const std::vector<double>& radii, std::size_t samples_per_radius,
                                    std::uint64_t seed);

}  // namespace dlab
