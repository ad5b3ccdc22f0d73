#include "dlab/sde.hpp"

#include "dlab/errors.hpp"
#include "dlab/toy_model.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace dlab;

namespace {

Drift quadratic_drift() {
  return [](const VectorXd& th, VectorXd& out) { out = 2.0 * th; };
}

Drift zero_drift() {
  return [](const VectorXd& th, VectorXd& out) { out.setZero(th.size()); };
}

// Closed form of the toy data term: mean x^2 (e^{0.5} - growth)^2 on the midpoint grid.
double toy_mean_x2(const ToyModelSpec& s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.n_samples; ++i) {
    const double x = s.x_lo + (s.x_hi - s.x_lo) * (i + 0.5) / s.n_samples;
    acc += x * x;
  }
  return acc / s.n_samples;
}

double clamp_radius(double a, double cap) {
  const double r = std::abs(a);
  if (r <= cap) return a;
  const double s = std::min((r - cap) / cap, 1.0);
  const double w = s * s * s * (6 * s * s - 15 * s + 10);
  return std::copysign(r * (1 - w) + 2 * cap * w, a);
}

}  // namespace

TEST_CASE("zero noise reduces to gradient descent") {
  const NoiseModel quiet{MatrixXd::Zero(2, 2), 1};
  VectorXd th0(2);
  th0 << 1.0, -0.5;
  double prev_err = 0.0;
  for (double h : {1.0 / 64, 1.0 / 128, 1.0 / 256}) {
    const SDEPath p = euler_maruyama(quadratic_drift(), quiet, th0, 1.0, h);
    REQUIRE(p.times.size() == static_cast<std::size_t>(std::lround(1.0 / h)) + 1);
    CHECK(p.times.front() == 0.0);
    CHECK(p.times.back() == 1.0);
    const VectorXd exact_euler = th0 * std::pow(1.0 - 2.0 * h, std::lround(1.0 / h));
    CHECK((p.theta.back() - exact_euler).norm() < 1e-14);
    const double err = (p.theta.back() - th0 * std::exp(-2.0)).norm();
    CHECK(err < 4.0 * h * th0.norm());
    if (prev_err > 0.0) CHECK(err / prev_err == doctest::Approx(0.5).epsilon(0.05));
    prev_err = err;
  }
}

TEST_CASE("pure Brownian motion has variance 2T") {
  const NoiseModel noise = NoiseModel::isotropic(2, std::sqrt(2.0), 77);
  const std::size_t n = 10000;
  const double T = 0.5;
  double s0 = 0, s1 = 0, s00 = 0, s11 = 0, s01 = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const VectorXd e = euler_maruyama(zero_drift(), noise, VectorXd::Zero(2), T, T / 16, p).theta.back();
    s0 += e[0];
    s1 += e[1];
    s00 += e[0] * e[0];
    s11 += e[1] * e[1];
    s01 += e[0] * e[1];
  }
  const double nn = static_cast<double>(n);
  const double var0 = (s00 - s0 * s0 / nn) / (nn - 1);
  const double var1 = (s11 - s1 * s1 / nn) / (nn - 1);
  const double cov = (s01 - s0 * s1 / nn) / (nn - 1);
  const double se = 2.0 * T * std::sqrt(2.0 / (nn - 1));
  CHECK(std::abs(var0 - 2.0 * T) < 3.0 * se);
  CHECK(std::abs(var1 - 2.0 * T) < 3.0 * se);
  CHECK(std::abs(cov) < 3.0 * 2.0 * T / std::sqrt(nn));
}

TEST_CASE("paths are reproducible and couple through shared increments") {
  const NoiseModel noise = NoiseModel::isotropic(3, 0.7, 5);
  VectorXd th0 = VectorXd::LinSpaced(3, -1.0, 1.0);
  const SDEPath a = euler_maruyama(quadratic_drift(), noise, th0, 1.0, 1.0 / 32, 4, true);
  const SDEPath b = euler_maruyama(quadratic_drift(), noise, th0, 1.0, 1.0 / 32, 4, true);
  const SDEPath c = euler_maruyama(zero_drift(), noise, th0, 1.0, 1.0 / 32, 4, true);
  const SDEPath other = euler_maruyama(zero_drift(), noise, th0, 1.0, 1.0 / 32, 5, true);
  REQUIRE(a.increments.size() == 32);
  for (std::size_t k = 0; k < a.theta.size(); ++k) CHECK(a.theta[k] == b.theta[k]);
  for (std::size_t k = 0; k < a.increments.size(); ++k) {
    CHECK(a.increments[k] == c.increments[k]);
    CHECK(a.increments[k] != other.increments[k]);
  }
}

TEST_CASE("coupled run with equal drifts has zero distance") {
  const NoiseModel noise = NoiseModel::isotropic(2);
  const CoupledRun same = coupled_run(quadratic_drift(), quadratic_drift(), noise, {}, 1.0, 1.0 / 64, 3);
  CHECK(same.sup_dist == 0.0);
  CHECK(same.continuous.theta.front().norm() <= 1.0);
  const CoupledRun diff = coupled_run(quadratic_drift(), zero_drift(), noise, {}, 1.0, 1.0 / 64, 3);
  CHECK(diff.sup_dist > 0.0);
  CHECK(diff.continuous.theta.front() == diff.discrete.theta.front());
}

TEST_CASE("noise and step validation") {
  MatrixXd rank1(2, 2);
  rank1 << 1, 2, 2, 4;
  CHECK_THROWS_AS(NoiseModel({rank1, 1}).validate(), std::invalid_argument);
  CHECK_NOTHROW(NoiseModel({MatrixXd::Zero(2, 2), 1}).validate());
  CHECK_THROWS_AS(NoiseModel({MatrixXd::Identity(2, 3), 1}).validate(), DimensionError);
  CHECK_THROWS_AS(sde_step_count(1.0, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(sde_step_count(1.0, 2.0), std::invalid_argument);
  CHECK(sde_step_count(1.0, 1.0 / 2048) == 2048);
}

TEST_CASE("overflow reports the step") {
  const Drift blowup = [](const VectorXd& th, VectorXd& out) { out = -1e200 * th; };
  try {
    euler_maruyama(blowup, NoiseModel{MatrixXd::Zero(1, 1), 1}, VectorXd::Ones(1), 1.0, 0.25);
    FAIL("expected overflow");
  } catch (const NonFiniteError& e) {
    CHECK(e.step() == 2);
  }
}

TEST_CASE("initial distributions have compact support") {
  RandomStream rng(3, 0);
  InitDistribution ball{InitKind::uniform_ball, 1.5, VectorXd()};
  InitDistribution box{InitKind::uniform_box, 0.5, VectorXd::Constant(4, 2.0)};
  for (int i = 0; i < 2000; ++i) {
    CHECK(ball.sample(rng, 4).norm() <= 1.5);
    CHECK((box.sample(rng, 4).array() - 2.0).abs().maxCoeff() <= 0.5);
  }
}

TEST_CASE("polynomial test functions") {
  const PolynomialTest p{"p", {1.0, -2.0, 3.0}, 1};
  VectorXd th(2);
  th << 10.0, 2.0;
  CHECK(p(th) == 1.0 - 4.0 + 12.0);
}

TEST_CASE("toy potential matches its closed form") {
  const ToyModelSpec spec;
  const double mx2 = toy_mean_x2(spec);
  const double target = std::exp(spec.target_rate);
  const ScalarPotential cont(spec, FlowScheme::continuous());
  const ScalarPotential disc(spec, FlowScheme::euler(4));
  for (int i = 0; i <= 400; ++i) {
    const double a = -4.0 + 0.02 * i + 1e-3;
    const double rho = clamp_radius(a, spec.lambda_cap);
    const double want_c = mx2 * std::pow(target - std::exp(rho), 2);
    const double want_d = mx2 * std::pow(target - std::pow(1.0 + rho / 4, 4), 2);
    CHECK(std::abs(cont.data_term(a) - want_c) <= 1e-6 * std::max(1.0, want_c));
    CHECK(std::abs(disc.data_term(a) - want_d) <= 1e-6 * std::max(1.0, want_d));
    const double fd = (cont.value(a + 1e-6) - cont.value(a - 1e-6)) / 2e-6;
    CHECK(std::abs(cont.grad(a) - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("monte carlo study on the toy model") {
  const ToyModelSpec spec;
  const ProcessFactory factory = toy_process_factory(spec);
  McStudySpec ms;
  ms.n_list = {2, 4, 8, 16, 32, 64};
  ms.n_seeds = 200;
  ms.h = 1.0 / 512;
  ms.noise = NoiseModel::isotropic(1, std::sqrt(2.0), 11);
  ms.tests = {{"one", {1.0}}, {"square", {0.0, 0.0, 1.0}}};
  const McTable t = mc_statistics(factory, ms);
  REQUIRE(t.rows.size() == 6);
  for (const auto& r : t.rows) CHECK(r.weak[0].mean == 0.0);
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    CHECK(t.rows[i].sup_sq.mean <= t.rows[i - 1].sup_sq.mean + 2.0 * t.rows[i - 1].sup_sq.std_error);
  }
  REQUIRE(t.mean_gap_slope);
  REQUIRE(t.risk_gap_slope);
  CHECK(t.mean_gap_slope->slope <= -0.8);
  CHECK(t.risk_gap_slope->slope <= -0.8);

  // Four times the seeds halves the standard error.
  ms.n_seeds = 800;
  ms.n_list = {8};
  const McTable big = mc_statistics(factory, ms);
  ms.n_seeds = 200;
  const McTable small = mc_statistics(factory, ms);
  const double ratio = small.continuous_risk.std_error / big.continuous_risk.std_error;
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.5);

  // Identical processes: every gap vanishes.
  ProcessFactory same = factory;
  same.drift = [&](int) { return factory.drift(0); };
  same.objective = [&](int, const VectorXd& th) { return factory.objective(0, th); };
  const McTable degenerate = mc_statistics(same, ms);
  CHECK(degenerate.rows[0].mean_gap.mean == 0.0);
  CHECK(degenerate.rows[0].risk_gap.mean == 0.0);
  CHECK(degenerate.rows[0].sup_sq.mean == 0.0);

  // Zero noise and a point initialization: no variance across seeds.
  ms.noise.sigma.setZero();
  ms.init.radius = 0.0;
  ms.init.center = VectorXd::Constant(1, 0.3);
  const McTable quiet = mc_statistics(factory, ms);
  CHECK(quiet.continuous_risk.std_error == 0.0);
  CHECK(quiet.rows[0].mean_gap.std_error == 0.0);
}

TEST_CASE("monte carlo csv") {
  McTable t;
  t.rows.push_back({4, {0.1, 0.01}, {0.2, 0.02}, {0.3, 0.03}, {{0.4, 0.04}}});
  const auto p = std::filesystem::temp_directory_path() / "dlab_mc.csv";
  write_mc_csv(t, {{"cube", {0, 0, 0, 1}}}, p);
  std::ifstream in(p);
  std::string header, first, second;
  std::getline(in, header);
  std::getline(in, first);
  std::getline(in, second);
  CHECK(header == "N,statistic,estimate,stderr");
  CHECK(first.rfind("continuous,risk,", 0) == 0);
  CHECK(second == "4,mean_gap,0.1,0.01");
  std::filesystem::remove(p);
}
