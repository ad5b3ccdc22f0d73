#include "dlab/datasets.hpp"

#include "dlab/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dlab {

void StarlikeSpec::validate() const {
  if (!(r1 > 0.0 && r1 < r2 && r2 < r3)) throw std::invalid_argument("starlike: need 0 < r1 < r2 < r3");
  if (augment_dims < 0) throw std::invalid_argument("starlike: augment_dims must be >= 0");
}

std::optional<int> starlike_class(double x, double y, const StarlikeSpec& spec) {
  const double r = std::hypot(x, y);
  const double shape = 2.0 + std::cos(5.0 * std::atan2(y, x));
  if (r <= spec.r1 * shape) return -1;
  if (r >= spec.r2 * shape && r <= spec.r3 * shape) return 1;
  return std::nullopt;
}

LabeledDataset gen_starlike(const StarlikeSpec& spec) {
  spec.validate();
  RandomStream rng(spec.seed, 0);
  const std::size_t want_neg = spec.n_samples / 2;
  const std::size_t want_pos = spec.n_samples - want_neg;
  std::size_t neg = 0, pos = 0;
  const double bound = 3.0 * spec.r3;
  const std::size_t budget = 1000 * spec.n_samples + 1000000;
  LabeledDataset data;
  for (std::size_t draw = 0; neg < want_neg || pos < want_pos; ++draw) {
    if (draw >= budget) throw std::runtime_error("gen_starlike: rejection budget exceeded");
    const double x = rng.uniform(-bound, bound);
    const double y = rng.uniform(-bound, bound);
    if (x * x + y * y > bound * bound) continue;
    const auto cls = starlike_class(x, y, spec);
    if (!cls) continue;
    if (*cls < 0 ? neg >= want_neg : pos >= want_pos) continue;
    (*cls < 0 ? neg : pos) += 1;
    VectorXd p = VectorXd::Zero(2 + spec.augment_dims);
    p[0] = x;
    p[1] = y;
    data.inputs.push_back(std::move(p));
    data.labels.push_back(*cls);
  }
  return data;
}

LabeledDataset gen_concentric(double r1, double r2, double r3, std::size_t n, Index d, std::uint64_t seed) {
  if (!(r1 > 0.0 && r1 < r2 && r2 < r3)) throw std::invalid_argument("concentric: need 0 < r1 < r2 < r3");
  if (d < 1) throw std::invalid_argument("concentric: dimension must be positive");
  RandomStream rng(seed, 0);
  const double dd = static_cast<double>(d);
  LabeledDataset data;
  for (std::size_t i = 0; i < n; ++i) {
    const bool inner = i < n / 2;
    VectorXd dir(d);
    for (auto& e : dir) e = rng.normal();
    dir /= dir.norm();
    const double u = rng.uniform();
    const double r = inner ? r1 * std::pow(u, 1.0 / dd)
                           : std::pow(std::pow(r2, dd) + u * (std::pow(r3, dd) - std::pow(r2, dd)), 1.0 / dd);
    data.inputs.push_back(r * dir);
    data.labels.push_back(inner ? -1 : 1);
  }
  return data;
}

LabeledDataset gen_regression_oracle(const RegressionOracleSpec& spec) {
  RandomStream rng(spec.seed, 0);
  LabeledDataset data;
  std::optional<FieldEvaluator> ev;
  if (spec.kind == RegressionKind::self_consistent) {
    if (!spec.theta) throw std::invalid_argument("self-consistent oracle needs weights");
    if (spec.theta->shape().dim != spec.dim) throw std::invalid_argument("self-consistent oracle: dimension mismatch");
    ev.emplace(spec.activation, *spec.theta);
  }
  const MatrixXd map = spec.linear_map.size() ? spec.linear_map : MatrixXd::Identity(spec.dim, spec.dim);
  if (map.cols() != spec.dim) throw std::invalid_argument("gaussian-linear oracle: map has wrong width");
  for (std::size_t i = 0; i < spec.n; ++i) {
    VectorXd x(spec.dim);
    for (auto& e : x) e = spec.input_scale * rng.normal();
    VectorXd y = ev ? flow_endpoint(*ev, x, spec.scheme, false).x : VectorXd(map * x);
    data.inputs.push_back(std::move(x));
    data.targets.push_back(std::move(y));
  }
  return data;
}

DatasetMoments sample_moments(const LabeledDataset& data, int order) {
  DatasetMoments out;
  out.input.assign(order, 0.0);
  if (!data.is_classification()) out.target.assign(order, 0.0);
  if (data.empty()) return out;
  const double n = static_cast<double>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double rx = data.inputs[i].norm();
    const double ry = data.is_classification() ? 0.0 : data.targets[i].norm();
    for (int k = 1; k <= order; ++k) {
      out.input[k - 1] += std::pow(rx, k) / n;
      if (!out.target.empty()) out.target[k - 1] += std::pow(ry, k) / n;
    }
  }
  return out;
}

}  // namespace dlab
