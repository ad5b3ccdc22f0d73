#include "dlab/regularity.hpp"

#include <doctest.h>

using namespace dlab;

TEST_CASE("zero weights give zero ratios") {
  RegularityProbeOptions opts;
  opts.sample_count = 1000;
  opts.theta_radius = 0.0;
  const auto report = regularity_probe({Activation::tanh, {2, 3}}, opts);
  for (const auto& s : report.single) CHECK(s.max_ratio == 0.0);
  for (const auto& s : report.composed) CHECK(s.max_ratio == 0.0);
}

TEST_CASE("prototype net at radius one respects g(s) = s + 1 in x") {
  for (Activation act : {Activation::tanh, Activation::swish, Activation::relu}) {
    RegularityProbeOptions opts;
    opts.sample_count = 2000;
    opts.seed = 17;
    const auto report = regularity_probe({act, {2, 4}}, opts);
    CAPTURE(activation_name(act));
    CHECK(report.samples == 2000);
    CHECK(report.single[1].violations == 0);
    CHECK(report.single[1].max_ratio <= 1.0);
    // The composition bound 2 g^3 covers x-Lipschitz of two stacked blocks.
    CHECK(report.composed[1].violations == 0);
    if (act != Activation::relu) {
      CHECK(report.single[3].violations == 0);
      CHECK(report.composed[3].violations == 0);
    }
  }
}
