#include "dlab/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace dlab {

void ToyModelSpec::validate() const {
  if (n_samples == 0) throw std::invalid_argument("toy model: need at least one sample");
  if (!(x_lo > 0.0 && x_lo < x_hi)) throw std::invalid_argument("toy model: need 0 < x_lo < x_hi");
  if (!(lambda_cap > 0.0) || gamma < 0.0 || lam <= 0.0 || rho0 < 0.0) {
    throw std::invalid_argument("toy model: invalid penalty or truncation constants");
  }
  if (table_nodes < 3) throw std::invalid_argument("toy model: need at least 3 table nodes");
  if (oracle_steps < 1) throw std::invalid_argument("toy model: oracle_steps must be positive");
}

LabeledDataset toy_dataset(const ToyModelSpec& spec) {
  LabeledDataset data;
  const double scale = std::exp(spec.target_rate);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const double x = spec.x_lo + (spec.x_hi - spec.x_lo) * (static_cast<double>(i) + 0.5) / spec.n_samples;
    data.inputs.push_back(VectorXd::Constant(1, x));
    data.targets.push_back(VectorXd::Constant(1, scale * x));
  }
  return data;
}

Model toy_model() {
  const VectorFieldSpec field{Activation::relu, {1, 1}};
  VectorXd anchor = VectorXd::Zero(field.shape.param_count());
  anchor[field.shape.k2_offset()] = 1.0;
  MatrixXd basis = MatrixXd::Zero(field.shape.param_count(), 1);
  basis(field.shape.k1_offset(), 0) = 1.0;
  return Model::slice(field, WeightVector(field.shape, anchor), basis);
}

RiskConfig toy_risk_config(const ToyModelSpec& spec, const FlowScheme& scheme) {
  RiskConfig cfg;
  cfg.loss = Loss::squared;
  cfg.truncation.lambda_cap = spec.lambda_cap;
  cfg.regularizer = {spec.gamma, spec.lam, spec.rho0};
  cfg.scheme = scheme;
  return cfg;
}

ScalarPotential::ScalarPotential(const ToyModelSpec& spec, const FlowScheme& scheme) : spec_(spec), scheme_(scheme) {
  spec.validate();
  if (scheme_.is_continuous()) scheme_.oracle_steps = spec.oracle_steps;
  const LabeledDataset data = toy_dataset(spec);
  const Model model = toy_model();
  RiskConfig cfg = toy_risk_config(spec, scheme_);
  cfg.regularizer.gamma = 0.0;
  lo_ = -2.0 * spec.lambda_cap;
  step_ = 4.0 * spec.lambda_cap / static_cast<double>(spec.table_nodes - 1);
  d_.resize(spec.table_nodes);
  dd_.resize(spec.table_nodes);
  for (std::size_t j = 0; j < spec.table_nodes; ++j) {
    const double a = lo_ + step_ * static_cast<double>(j);
    const RiskEvaluation e = evaluate_risk(model, VectorXd::Constant(1, a), data, cfg, true);
    d_[j] = e.data_term;
    dd_[j] = e.grad[0];
  }
}

void ScalarPotential::locate(double a, std::size_t& j, double& t) const {
  const double u = (a - lo_) / step_;
  const auto last = d_.size() - 1;
  j = static_cast<std::size_t>(std::clamp(std::floor(u), 0.0, static_cast<double>(last - 1)));
  t = u - static_cast<double>(j);
}

double ScalarPotential::data_term(double a) const {
  if (a <= lo_) return d_.front();
  if (a >= -lo_) return d_.back();
  std::size_t j;
  double t;
  locate(a, j, t);
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * d_[j] + (t3 - 2 * t2 + t) * step_ * dd_[j] + (-2 * t3 + 3 * t2) * d_[j + 1] +
         (t3 - t2) * step_ * dd_[j + 1];
}

double ScalarPotential::value(double a) const {
  return data_term(a) + spec_.gamma * regularizer(VectorXd::Constant(1, a), {spec_.gamma, spec_.lam, spec_.rho0}).value;
}

double ScalarPotential::grad(double a) const {
  double g = 0.0;
  if (a > lo_ && a < -lo_) {
    std::size_t j;
    double t;
    locate(a, j, t);
    const double t2 = t * t;
    g = ((6 * t2 - 6 * t) * d_[j] + (3 * t2 - 4 * t + 1) * step_ * dd_[j] + (-6 * t2 + 6 * t) * d_[j + 1] +
         (3 * t2 - 2 * t) * step_ * dd_[j + 1]) /
        step_;
  }
  return g + spec_.gamma * regularizer(VectorXd::Constant(1, a), {spec_.gamma, spec_.lam, spec_.rho0}).grad[0];
}

ProcessFactory toy_process_factory(const ToyModelSpec& spec) {
  struct Cache {
    std::mutex lock;
    std::map<int, std::shared_ptr<const ScalarPotential>> potentials;
  };
  auto cache = std::make_shared<Cache>();
  auto get = [spec, cache](int n) {
    std::lock_guard<std::mutex> guard(cache->lock);
    auto& slot = cache->potentials[n];
    if (!slot) slot = std::make_shared<const ScalarPotential>(spec, n ? FlowScheme::euler(n) : FlowScheme::continuous());
    return slot;
  };
  ProcessFactory f;
  f.drift = [get](int n) -> Drift {
    auto v = get(n);
    return [v](const VectorXd& theta, VectorXd& out) { out.setConstant(1, v->grad(theta[0])); };
  };
  f.objective = [get](int n, const VectorXd& theta) { return get(n)->value(theta[0]); };
  return f;
}

}  // namespace dlab
