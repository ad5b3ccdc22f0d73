#pragma once

// Empirical probe of the four Lipschitz/growth inequalities that define the
// regularity class A(g), for one block and for a two-block composition.

#include "dlab/field.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace dlab {

/// Prototype growth bound g(s) = s + 1.
inline double prototype_growth(double s) { return s + 1.0; }

struct InequalityStat {
  std::string name;
  double max_ratio = 0.0;  // max over samples of lhs / bound; <= 1 means satisfied
  std::size_t violations = 0;
};

struct RegularityReport {
  std::size_t samples = 0;
  std::array<InequalityStat, 4> single;    // f_theta against g
  std::array<InequalityStat, 4> composed;  // f_theta2 o f_theta1 against 2 g^3
};

struct RegularityProbeOptions {
  std::size_t sample_count = 1000;
  double theta_radius = 1.0;  // per block for the composition
  double x_radius = 1.0;
  std::uint64_t seed = 1;
};

/// Order of the inequalities in the report.
inline constexpr std::array<const char*, 4> kRegularityInequalities = {
    "theta_lipschitz", "x_lipschitz", "grad_theta_lipschitz", "grad_x_lipschitz"};

RegularityReport regularity_probe(const VectorFieldSpec& spec, const RegularityProbeOptions& opts);

}  // namespace dlab
