#include "dlab/datasets.hpp"

#include "dlab/risk.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace dlab;

namespace {

// Independent region test in polar form.
bool in_region(const VectorXd& p, int label, const StarlikeSpec& s) {
  const double r = std::sqrt(p[0] * p[0] + p[1] * p[1]);
  const double t = std::atan2(p[1], p[0]);
  const double g = 2.0 + std::cos(5.0 * t);
  return label < 0 ? r <= s.r1 * g : (s.r2 * g <= r && r <= s.r3 * g);
}

}  // namespace

TEST_CASE("starlike region examples") {
  const StarlikeSpec s;
  CHECK(starlike_class(2.0, 0.0, s) == -1);
  CHECK(starlike_class(5.0, 0.0, s) == 1);
  CHECK_FALSE(starlike_class(4.0, 0.0, s).has_value());
  CHECK_FALSE(starlike_class(9.5, 0.0, s).has_value());
}

TEST_CASE("starlike samples lie in their regions") {
  StarlikeSpec s;
  s.n_samples = 2001;
  s.augment_dims = 2;
  s.seed = 17;
  const LabeledDataset d = gen_starlike(s);
  REQUIRE(d.size() == 2001);
  CHECK(std::count(d.labels.begin(), d.labels.end(), -1) == 1000);
  for (std::size_t i = 0; i < d.size(); ++i) {
    REQUIRE(d.inputs[i].size() == 4);
    CHECK(d.inputs[i].tail(2).norm() == 0.0);
    CHECK(in_region(d.inputs[i], d.labels[i], s));
  }
  const LabeledDataset again = gen_starlike(s);
  CHECK(again.labels == d.labels);
  for (std::size_t i = 0; i < d.size(); ++i) CHECK(again.inputs[i] == d.inputs[i]);
}

TEST_CASE("starlike spec validation") {
  StarlikeSpec s;
  s.r2 = 0.5;
  CHECK_THROWS_AS(gen_starlike(s), std::invalid_argument);
  s = StarlikeSpec{};
  s.augment_dims = -1;
  CHECK_THROWS_AS(gen_starlike(s), std::invalid_argument);
}

TEST_CASE("starlike inner class is area uniform") {
  // The angular density of an area-uniform sample is proportional to (2 + cos 5t)^2.
  StarlikeSpec s;
  s.n_samples = 20000;
  const LabeledDataset d = gen_starlike(s);
  int near_lobe = 0, near_notch = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.labels[i] > 0) continue;
    const double t = std::atan2(d.inputs[i][1], d.inputs[i][0]);
    const double phase = std::remainder(5.0 * t, 2.0 * M_PI);
    if (std::abs(phase) < 0.3) ++near_lobe;
    if (std::abs(std::abs(phase) - M_PI) < 0.3) ++near_notch;
  }
  // Expected ratio 9 : 1 at the centres of the two windows; the window average is slightly lower.
  const double ratio = static_cast<double>(near_lobe) / near_notch;
  CHECK(ratio > 7.0);
  CHECK(ratio < 10.0);
}

TEST_CASE("concentric annuli membership and radial law") {
  const double r1 = 1.0, r2 = 2.0, r3 = 3.0;
  for (Index dim : {2, 5}) {
    const std::size_t n = 20000;
    const LabeledDataset d = gen_concentric(r1, r2, r3, n, dim, 3);
    CHECK(std::count(d.labels.begin(), d.labels.end(), -1) == static_cast<long>(n / 2));
    std::vector<double> outer;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double r = d.inputs[i].norm();
      if (d.labels[i] < 0) {
        CHECK(r <= r1);
      } else {
        CHECK(r >= r2 * (1 - 1e-12));
        CHECK(r <= r3 * (1 + 1e-12));
        outer.push_back(r);
      }
    }
    std::sort(outer.begin(), outer.end());
    const double dd = static_cast<double>(dim);
    const auto cdf = [&](double r) { return (std::pow(r, dd) - std::pow(r2, dd)) / (std::pow(r3, dd) - std::pow(r2, dd)); };
    double ks = 0.0;
    const double m = static_cast<double>(outer.size());
    for (std::size_t i = 0; i < outer.size(); ++i) {
      const double f = cdf(outer[i]);
      ks = std::max({ks, std::abs(f - i / m), std::abs((i + 1) / m - f)});
    }
    CHECK(ks < 1.628 / std::sqrt(m));
  }
  CHECK_THROWS_AS(gen_concentric(2.0, 1.0, 3.0, 10, 2, 1), std::invalid_argument);
}

TEST_CASE("regression oracles have known optimal risk") {
  const VectorFieldSpec field{Activation::tanh, {2, 3}};
  RegressionOracleSpec spec;
  spec.kind = RegressionKind::gaussian_linear;
  spec.n = 50;
  const LabeledDataset lin = gen_regression_oracle(spec);
  RiskConfig cfg;
  cfg.regularizer.gamma = 0.0;
  cfg.scheme = FlowScheme::euler(4);
  const Model model = Model::full(field);
  CHECK(risk(model, VectorXd::Zero(field.shape.param_count()), lin, cfg) == 0.0);

  spec.kind = RegressionKind::self_consistent;
  VectorXd star(field.shape.param_count());
  for (Index i = 0; i < star.size(); ++i) star[i] = 0.1 * std::sin(1.0 + i);
  spec.theta = WeightVector(field.shape, star);
  spec.scheme = FlowScheme::euler(4);
  const LabeledDataset self = gen_regression_oracle(spec);
  CHECK(risk(model, star, self, cfg) == 0.0);

  const DatasetMoments mom = sample_moments(self, 4);
  REQUIRE(mom.input.size() == 4);
  for (double v : mom.input) CHECK(std::isfinite(v));
  for (double v : mom.target) CHECK(std::isfinite(v));
  // E|x|^2 = 2 for standard normal inputs in the plane.
  CHECK(std::abs(mom.input[1] - 2.0) < 0.8);

  spec.theta.reset();
  CHECK_THROWS_AS(gen_regression_oracle(spec), std::invalid_argument);
}
