#pragma once

#include <span>
#include <utility>
#include <vector>

namespace dlab {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
};

/// Least squares on (log N, log value). Needs at least three pairs, all positive.
SlopeFit fit_slope(std::span<const std::pair<double, double>> pairs);

/// Ordinary least squares y = slope * x + intercept on raw values.
SlopeFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace dlab
