#pragma once

// Forward Euler ResNet flow, RK4 reference flow, and their forward sensitivities.

#include "dlab/field.hpp"
#include "dlab/fit.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dlab {

/// Smallest RK4 resolution used as ground truth.
inline constexpr int kMinOracleSteps = 1 << 14;

/// Oracle resolution for comparison against an N-step scheme: at least
/// max(2^14, 64 N) and a multiple of N so that i/N lies on the grid.
int oracle_steps_for(int n_steps);

/// Which flow map x0 -> x(1): the N-step Euler scheme or the RK4 reference.
struct FlowScheme {
  int euler_steps = 0;  // 0 selects the continuous flow
  int oracle_steps = kMinOracleSteps;

  static FlowScheme euler(int n) { return {n, kMinOracleSteps}; }
  static FlowScheme continuous(int oracle = kMinOracleSteps) { return {0, oracle}; }
  bool is_continuous() const { return euler_steps == 0; }
};

struct DiscreteTrajectory {
  int n_steps = 0;
  std::vector<VectorXd> states;         // x_0 ... x_N
  std::vector<MatrixXd> sensitivities;  // empty unless requested; S_i = d x_i / d theta
};

struct ContinuousTrajectory {
  int oracle_steps = 0;
  std::vector<double> time_grid;
  std::vector<VectorXd> states;
  std::optional<MatrixXd> final_sensitivity;
};

struct FlowEndpoint {
  VectorXd x;
  MatrixXd sens;  // empty unless requested
};

DiscreteTrajectory euler_forward(Activation act, const WeightVector& theta, const VectorXd& x0, int n_steps,
                                 bool with_sensitivity);

ContinuousTrajectory ode_solve(Activation act, const WeightVector& theta, const VectorXd& x0, int oracle_steps,
                               bool with_sensitivity);

/// Endpoint of either scheme without storing the path. The evaluator must hold the weights.
FlowEndpoint flow_endpoint(FieldEvaluator& ev, const VectorXd& x0, const FlowScheme& scheme, bool with_sensitivity);

FlowEndpoint flow_endpoint(Activation act, const WeightVector& theta, const VectorXd& x0, const FlowScheme& scheme,
                           bool with_sensitivity);

struct DiscrepancyRow {
  int n_steps = 0;
  double value = 0.0;
};

struct DiscrepancyTable {
  std::vector<DiscrepancyRow> rows;
  std::optional<SlopeFit> slope;  // absent when every discrepancy is exactly zero
  bool exact() const { return !slope.has_value(); }
};

/// max_i |x(i/N) - x_i^(N)| per N against the RK4 oracle.
DiscrepancyTable discrepancy_study(Activation act, const WeightVector& theta, const VectorXd& x0,
                                   std::span<const int> n_list);

/// |d_theta x(1) - d_theta x_N^(N)| (Frobenius) per N.
DiscrepancyTable grad_discrepancy_study(Activation act, const WeightVector& theta, const VectorXd& x0,
                                        std::span<const int> n_list);

/// Second derivatives d^2 x(1) / d theta^2 by central differences of the exact
/// sensitivity. Entry k is the param_count x param_count Hessian of coordinate k.
/// Only smooth activations are accepted.
std::vector<MatrixXd> sensitivity_hessian(Activation act, const WeightVector& theta, const VectorXd& x0,
                                          const FlowScheme& scheme, double step = 1e-5);

}  // namespace dlab
