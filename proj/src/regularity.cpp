#include "dlab/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace dlab {

namespace {

VectorXd uniform_ball(std::mt19937_64& rng, Index n, double radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif;
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = normal(rng);
  const double nv = v.norm();
  if (nv == 0.0 || radius == 0.0) return VectorXd::Zero(n);
  return v * (radius * std::pow(unif(rng), 1.0 / static_cast<double>(n)) / nv);
}

// Value and derivatives of a block or of the composition of two blocks.
struct Eval {
  VectorXd value;
  MatrixXd dx;
  MatrixXd dtheta;
};

Eval eval_single(Activation act, const WeightVector& theta, const VectorXd& x) {
  FieldEvaluator ev(act, theta);
  Eval e;
  ev.value(x, e.value);
  ev.dx(e.dx);
  ev.dtheta(e.dtheta);
  return e;
}

// theta = (theta1, theta2), F = f_theta2 o f_theta1.
Eval eval_composed(Activation act, const FieldShape& shape, const VectorXd& theta, const VectorXd& x) {
  const Index m = shape.param_count();
  const WeightVector t1(shape, theta.head(m));
  const WeightVector t2(shape, theta.tail(m));
  const Eval inner = eval_single(act, t1, x);
  const Eval outer = eval_single(act, t2, inner.value);
  Eval e;
  e.value = outer.value;
  e.dx = outer.dx * inner.dx;
  e.dtheta.resize(shape.dim, 2 * m);
  e.dtheta.leftCols(m) = outer.dx * inner.dtheta;
  e.dtheta.rightCols(m) = outer.dtheta;
  return e;
}

void record(InequalityStat& stat, double lhs, double bound) {
  double ratio = 0.0;
  if (lhs > 0.0) ratio = bound > 0.0 ? lhs / bound : std::numeric_limits<double>::infinity();
  stat.max_ratio = std::max(stat.max_ratio, ratio);
  if (ratio > 1.0) ++stat.violations;
}

template <class EvalFn>
void probe_block(std::array<InequalityStat, 4>& stats, const EvalFn& eval, const VectorXd& th, const VectorXd& thp,
                 const VectorXd& x, const VectorXd& xp, double g_th, double g_thp) {
  const Eval a = eval(th, x);
  const Eval b = eval(thp, x);
  const Eval c = eval(th, xp);
  const double dx = (x - xp).norm();
  record(stats[0], (a.value - b.value).norm(), std::max(g_th, g_thp) * (th - thp).norm() * x.norm());
  record(stats[1], (a.value - c.value).norm(), g_th * dx);
  record(stats[2], (a.dtheta - c.dtheta).norm(), g_th * std::max(x.norm(), xp.norm()) * dx);
  record(stats[3], (a.dx - c.dx).norm(), g_th * dx);
}

}  // namespace

RegularityReport regularity_probe(const VectorFieldSpec& spec, const RegularityProbeOptions& opts) {
  if (opts.theta_radius < 0.0 || opts.x_radius < 0.0) throw std::invalid_argument("regularity_probe: negative radius");
  RegularityReport report;
  report.samples = opts.sample_count;
  for (std::size_t i = 0; i < 4; ++i) {
    report.single[i].name = kRegularityInequalities[i];
    report.composed[i].name = kRegularityInequalities[i];
  }
  std::mt19937_64 rng(opts.seed);
  const FieldShape shape = spec.shape;
  const Index m = shape.param_count();
  const auto single = [&](const VectorXd& th, const VectorXd& x) {
    return eval_single(spec.activation, WeightVector(shape, th), x);
  };
  const auto composed = [&](const VectorXd& th, const VectorXd& x) {
    return eval_composed(spec.activation, shape, th, x);
  };
  const auto composed_growth = [](double s) {
    const double g = prototype_growth(s);
    return 2.0 * g * g * g;
  };
  for (std::size_t s = 0; s < opts.sample_count; ++s) {
    const VectorXd x = uniform_ball(rng, shape.dim, opts.x_radius);
    const VectorXd xp = uniform_ball(rng, shape.dim, opts.x_radius);
    const VectorXd th = uniform_ball(rng, m, opts.theta_radius);
    const VectorXd thp = uniform_ball(rng, m, opts.theta_radius);
    probe_block(report.single, single, th, thp, x, xp, prototype_growth(th.norm()), prototype_growth(thp.norm()));

    VectorXd th2(2 * m), thp2(2 * m);
    th2 << th, uniform_ball(rng, m, opts.theta_radius);
    thp2 << thp, uniform_ball(rng, m, opts.theta_radius);
    probe_block(report.composed, composed, th2, thp2, x, xp, composed_growth(th2.norm()),
                composed_growth(thp2.norm()));
  }
  return report;
}

}  // namespace dlab
