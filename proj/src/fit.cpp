#include "dlab/fit.hpp"

#include "dlab/errors.hpp"

#include <cmath>

namespace dlab {

SlopeFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw FitError("fit_line: length mismatch");
  if (x.size() < 2) throw FitError("fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw FitError("fit_line: abscissae are all equal");
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

SlopeFit fit_slope(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw FitError("fit_slope: need at least three (N, value) pairs");
  std::vector<double> lx, ly;
  lx.reserve(pairs.size());
  ly.reserve(pairs.size());
  for (const auto& [n, v] : pairs) {
    if (!(n > 0.0) || !(v > 0.0) || !std::isfinite(v)) {
      throw FitError("fit_slope: values must be positive and finite");
    }
    lx.push_back(std::log(n));
    ly.push_back(std::log(v));
  }
  return fit_line(lx, ly);
}

}  // namespace dlab
