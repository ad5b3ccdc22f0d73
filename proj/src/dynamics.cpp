#include "dlab/dynamics.hpp"

#include "dlab/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace dlab {

namespace {

void check_finite(const VectorXd& x, std::size_t step, const char* who) {
  if (!x.allFinite()) throw NonFiniteError(std::string(who) + ": state left the finite range", step);
}

// Classical RK4 on (x, S) with S' = d_x f S + d_theta f.
class Rk4Stepper {
 public:
  Rk4Stepper(FieldEvaluator& ev, bool with_sens) : ev_(ev), sens_(with_sens) {
    const Index d = ev.dim();
    const Index m = ev.param_count();
    for (auto& k : kx_) k.resize(d);
    xs_.resize(d);
    if (sens_) {
      for (auto& k : ks_) k.resize(d, m);
      ss_.resize(d, m);
    }
  }

  void step(VectorXd& x, MatrixXd& s, double h) {
    eval(x, s, 0);
    xs_ = x + 0.5 * h * kx_[0];
    if (sens_) ss_ = s + 0.5 * h * ks_[0];
    eval(xs_, ss_, 1);
    xs_ = x + 0.5 * h * kx_[1];
    if (sens_) ss_ = s + 0.5 * h * ks_[1];
    eval(xs_, ss_, 2);
    xs_ = x + h * kx_[2];
    if (sens_) ss_ = s + h * ks_[2];
    eval(xs_, ss_, 3);
    x += (h / 6.0) * (kx_[0] + 2.0 * kx_[1] + 2.0 * kx_[2] + kx_[3]);
    if (sens_) s += (h / 6.0) * (ks_[0] + 2.0 * ks_[1] + 2.0 * ks_[2] + ks_[3]);
  }

 private:
  void eval(const VectorXd& x, const MatrixXd& s, int k) {
    ev_.value(x, kx_[k]);
    if (sens_) {
      ks_[k].setZero();
      ev_.accumulate_tangent(s, 1.0, ks_[k]);
    }
  }

  FieldEvaluator& ev_;
  bool sens_;
  std::array<VectorXd, 4> kx_;
  std::array<MatrixXd, 4> ks_;
  VectorXd xs_;
  MatrixXd ss_;
};

void require_steps(int n, const char* who) {
  if (n < 1) throw std::invalid_argument(std::string(who) + ": step count must be >= 1");
}

}  // namespace

int oracle_steps_for(int n_steps) {
  require_steps(n_steps, "oracle_steps_for");
  const long target = std::max<long>(kMinOracleSteps, 64L * n_steps);
  const long k = (target + n_steps - 1) / n_steps;
  return static_cast<int>(k * n_steps);
}

DiscreteTrajectory euler_forward(Activation act, const WeightVector& theta, const VectorXd& x0, int n_steps,
                                 bool with_sensitivity) {
  require_steps(n_steps, "euler_forward");
  FieldEvaluator ev(act, theta);
  const double h = 1.0 / n_steps;
  DiscreteTrajectory traj;
  traj.n_steps = n_steps;
  traj.states.reserve(n_steps + 1);
  traj.states.push_back(x0);
  if (with_sensitivity) {
    traj.sensitivities.reserve(n_steps + 1);
    traj.sensitivities.push_back(MatrixXd::Zero(ev.dim(), ev.param_count()));
  }
  VectorXd f;
  for (int i = 0; i < n_steps; ++i) {
    const VectorXd& x = traj.states.back();
    ev.value(x, f);
    if (with_sensitivity) {
      MatrixXd s = traj.sensitivities.back();
      ev.accumulate_tangent(traj.sensitivities.back(), h, s);
      traj.sensitivities.push_back(std::move(s));
    }
    VectorXd next = x + h * f;
    check_finite(next, static_cast<std::size_t>(i + 1), "euler_forward");
    traj.states.push_back(std::move(next));
  }
  return traj;
}

ContinuousTrajectory ode_solve(Activation act, const WeightVector& theta, const VectorXd& x0, int oracle_steps,
                               bool with_sensitivity) {
  require_steps(oracle_steps, "ode_solve");
  FieldEvaluator ev(act, theta);
  if (x0.size() != ev.dim()) throw DimensionError("ode_solve: initial point has wrong dimension");
  Rk4Stepper stepper(ev, with_sensitivity);
  const double h = 1.0 / oracle_steps;
  ContinuousTrajectory traj;
  traj.oracle_steps = oracle_steps;
  traj.time_grid.reserve(oracle_steps + 1);
  traj.states.reserve(oracle_steps + 1);
  traj.time_grid.push_back(0.0);
  traj.states.push_back(x0);
  VectorXd x = x0;
  MatrixXd s;
  if (with_sensitivity) s = MatrixXd::Zero(ev.dim(), ev.param_count());
  for (int i = 0; i < oracle_steps; ++i) {
    stepper.step(x, s, h);
    check_finite(x, static_cast<std::size_t>(i + 1), "ode_solve");
    traj.time_grid.push_back(i + 1 == oracle_steps ? 1.0 : static_cast<double>(i + 1) / oracle_steps);
    traj.states.push_back(x);
  }
  if (with_sensitivity) traj.final_sensitivity = std::move(s);
  return traj;
}

FlowEndpoint flow_endpoint(FieldEvaluator& ev, const VectorXd& x0, const FlowScheme& scheme, bool with_sensitivity) {
  if (x0.size() != ev.dim()) throw DimensionError("flow_endpoint: initial point has wrong dimension");
  FlowEndpoint out;
  out.x = x0;
  if (with_sensitivity) out.sens = MatrixXd::Zero(ev.dim(), ev.param_count());
  if (scheme.is_continuous()) {
    require_steps(scheme.oracle_steps, "flow_endpoint");
    Rk4Stepper stepper(ev, with_sensitivity);
    const double h = 1.0 / scheme.oracle_steps;
    for (int i = 0; i < scheme.oracle_steps; ++i) {
      stepper.step(out.x, out.sens, h);
      check_finite(out.x, static_cast<std::size_t>(i + 1), "flow_endpoint");
    }
    return out;
  }
  require_steps(scheme.euler_steps, "flow_endpoint");
  const double h = 1.0 / scheme.euler_steps;
  VectorXd f;
  for (int i = 0; i < scheme.euler_steps; ++i) {
    ev.value(out.x, f);
    if (with_sensitivity) ev.accumulate_tangent(out.sens, h, out.sens);
    out.x += h * f;
    check_finite(out.x, static_cast<std::size_t>(i + 1), "flow_endpoint");
  }
  return out;
}

FlowEndpoint flow_endpoint(Activation act, const WeightVector& theta, const VectorXd& x0, const FlowScheme& scheme,
                           bool with_sensitivity) {
  FieldEvaluator ev(act, theta);
  return flow_endpoint(ev, x0, scheme, with_sensitivity);
}

namespace {

DiscrepancyTable finish_table(std::vector<DiscrepancyRow> rows) {
  DiscrepancyTable table;
  table.rows = std::move(rows);
  const bool all_zero =
      std::all_of(table.rows.begin(), table.rows.end(), [](const DiscrepancyRow& r) { return r.value == 0.0; });
  if (!all_zero && table.rows.size() >= 3) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto& r : table.rows) pairs.emplace_back(r.n_steps, r.value);
    table.slope = fit_slope(pairs);
  }
  return table;
}

}  // namespace

DiscrepancyTable discrepancy_study(Activation act, const WeightVector& theta, const VectorXd& x0,
                                   std::span<const int> n_list) {
  std::vector<DiscrepancyRow> rows;
  for (int n : n_list) {
    require_steps(n, "discrepancy_study");
    const int oracle = oracle_steps_for(n);
    const int stride = oracle / n;
    const ContinuousTrajectory ref = ode_solve(act, theta, x0, oracle, false);
    const DiscreteTrajectory disc = euler_forward(act, theta, x0, n, false);
    double worst = 0.0;
    for (int i = 0; i <= n; ++i) {
      worst = std::max(worst, (ref.states[static_cast<std::size_t>(i) * stride] - disc.states[i]).norm());
    }
    rows.push_back({n, worst});
  }
  return finish_table(std::move(rows));
}

DiscrepancyTable grad_discrepancy_study(Activation act, const WeightVector& theta, const VectorXd& x0,
                                        std::span<const int> n_list) {
  std::vector<DiscrepancyRow> rows;
  FieldEvaluator ev(act, theta);
  for (int n : n_list) {
    require_steps(n, "grad_discrepancy_study");
    const FlowEndpoint ref = flow_endpoint(ev, x0, FlowScheme::continuous(oracle_steps_for(n)), true);
    const FlowEndpoint disc = flow_endpoint(ev, x0, FlowScheme::euler(n), true);
    rows.push_back({n, (ref.sens - disc.sens).norm()});
  }
  return finish_table(std::move(rows));
}

std::vector<MatrixXd> sensitivity_hessian(Activation act, const WeightVector& theta, const VectorXd& x0,
                                          const FlowScheme& scheme, double step) {
  if (!has_second_derivative(act)) {
    throw std::invalid_argument("sensitivity_hessian: activation is only first-order differentiable");
  }
  const Index m = theta.size();
  const Index d = theta.shape().dim;
  std::vector<MatrixXd> hess(static_cast<std::size_t>(d), MatrixXd(m, m));
  for (Index j = 0; j < m; ++j) {
    VectorXd plus = theta.flat(), minus = theta.flat();
    plus[j] += step;
    minus[j] -= step;
    const FlowEndpoint ep = flow_endpoint(act, WeightVector(theta.shape(), plus), x0, scheme, true);
    const FlowEndpoint em = flow_endpoint(act, WeightVector(theta.shape(), minus), x0, scheme, true);
    const MatrixXd col = (ep.sens - em.sens) / (2.0 * step);  // d x m: d/dtheta_j of S
    for (Index k = 0; k < d; ++k) hess[static_cast<std::size_t>(k)].col(j) = col.row(k).transpose();
  }
  return hess;
}

}  // namespace dlab
