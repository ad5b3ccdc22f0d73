#pragma once

// One-parameter risk instance used by the SDE and density studies. The
// network is f(x) = a relu(x) in one dimension, fitted to y = e^{target_rate} x
// on positive inputs, so the penalized truncated risk is a scalar potential V(a).

#include "dlab/dynamics.hpp"
#include "dlab/risk.hpp"
#include "dlab/sde.hpp"

namespace dlab {

struct ToyModelSpec {
  std::size_t n_samples = 16;
  double x_lo = 0.25;
  double x_hi = 0.75;
  double target_rate = 0.5;
  double lambda_cap = 1.0;
  double gamma = 1.0;
  double lam = 1.0;
  double rho0 = 1.0;
  std::size_t table_nodes = 513;  // over [-2 cap, 2 cap]
  int oracle_steps = 1024;        // RK4 steps of the continuous reference

  void validate() const;
};

/// Midpoint grid of inputs in [x_lo, x_hi].
LabeledDataset toy_dataset(const ToyModelSpec& spec);
Model toy_model();
RiskConfig toy_risk_config(const ToyModelSpec& spec, const FlowScheme& scheme);

/// The data term is tabulated on [-2 cap, 2 cap] and interpolated by cubic
/// Hermite splines with exact node derivatives; beyond 2 cap it is constant.
/// The penalty is evaluated exactly.
class ScalarPotential {
 public:
  ScalarPotential(const ToyModelSpec& spec, const FlowScheme& scheme);

  double value(double a) const;
  double grad(double a) const;
  double data_term(double a) const;
  const FlowScheme& scheme() const { return scheme_; }

 private:
  void locate(double a, std::size_t& j, double& t) const;

  ToyModelSpec spec_;
  FlowScheme scheme_;
  double lo_ = 0.0;
  double step_ = 0.0;
  std::vector<double> d_;
  std::vector<double> dd_;
};

/// Drifts grad V_N and objectives V_N of the toy model; N = 0 is the continuous
/// potential. Potentials are built once per N.
ProcessFactory toy_process_factory(const ToyModelSpec& spec);

}  // namespace dlab
