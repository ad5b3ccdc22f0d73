#include "dlab/risk.hpp"

#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace dlab {

double smoothstep5(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double smoothstep5_prime(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double t = s * (1.0 - s);
  return 30.0 * t * t;
}

double truncation_radius(double r, const TruncationSpec& spec) {
  const double cap = spec.lambda_cap;
  if (r <= cap) return r;
  if (r >= 2.0 * cap) return 2.0 * cap;
  const double w = smoothstep5((r - cap) / cap);
  return r * (1.0 - w) + 2.0 * cap * w;
}

double truncation_radius_prime(double r, const TruncationSpec& spec) {
  const double cap = spec.lambda_cap;
  if (r <= cap) return 1.0;
  if (r >= 2.0 * cap) return 0.0;
  const double s = (r - cap) / cap;
  return (1.0 - smoothstep5(s)) + smoothstep5_prime(s) * (1.0 - s);
}

Truncated trunc(const VectorXd& theta, const TruncationSpec& spec) {
  if (!(spec.lambda_cap > 0.0)) throw std::invalid_argument("trunc: cap must be positive");
  const Index m = theta.size();
  const double r = theta.norm();
  if (r <= spec.lambda_cap) return {theta, MatrixXd::Identity(m, m)};
  const double rho = truncation_radius(r, spec);
  const double drho = truncation_radius_prime(r, spec);
  const VectorXd u = theta / r;
  Truncated out;
  out.theta = rho * u;
  out.jac = (rho / r) * MatrixXd::Identity(m, m) + (drho - rho / r) * (u * u.transpose());
  return out;
}

RegularizerValue regularizer(const VectorXd& theta, const RegularizerSpec& spec) {
  if (spec.rho0 < 0.0 || spec.lam <= 0.0) throw std::invalid_argument("regularizer: invalid spec");
  const double r = theta.norm();
  RegularizerValue out;
  if (spec.rho0 == 0.0 || r >= 2.0 * spec.rho0) {
    out.value = spec.lam * r * r;
    out.grad = 2.0 * spec.lam * theta;
    return out;
  }
  if (r <= spec.rho0) {
    out.grad = VectorXd::Zero(theta.size());
    return out;
  }
  const double s = (r - spec.rho0) / spec.rho0;
  const double w = smoothstep5(s);
  out.value = w * spec.lam * r * r;
  out.grad = (smoothstep5_prime(s) * spec.lam * r / spec.rho0 + 2.0 * spec.lam * w) * theta;
  return out;
}

Model Model::full(const VectorFieldSpec& field) {
  Model m{field, WeightVector(field.shape), MatrixXd(), VectorXd(), 0.0};
  m.readout = VectorXd::Unit(field.shape.dim, 0);
  return m;
}

Model Model::slice(const VectorFieldSpec& field, const WeightVector& anchor, const MatrixXd& basis) {
  if (!(anchor.shape() == field.shape) || basis.rows() != field.shape.param_count()) {
    throw DimensionError("Model::slice: anchor/basis do not match the field");
  }
  Model m{field, anchor, basis, VectorXd::Unit(field.shape.dim, 0), 0.0};
  return m;
}

Index Model::param_count() const { return basis.size() == 0 ? field.shape.param_count() : basis.cols(); }

WeightVector Model::weights(const VectorXd& phi) const {
  if (phi.size() != param_count()) throw DimensionError("Model::weights: wrong parameter count");
  if (basis.size() == 0) return WeightVector(field.shape, anchor.flat() + phi);
  return WeightVector(field.shape, anchor.flat() + basis * phi);
}

RiskEvaluation evaluate_risk(const Model& model, const VectorXd& phi, const LabeledDataset& data,
                             const RiskConfig& cfg, bool with_grad) {
  if (cfg.loss == Loss::logistic && !data.empty() && !data.is_classification()) {
    throw std::invalid_argument("logistic loss needs a labelled dataset");
  }
  if (cfg.loss == Loss::squared && data.is_classification()) {
    throw std::invalid_argument("squared loss needs regression targets");
  }
  if (cfg.loss == Loss::logistic && model.readout.size() != model.field.shape.dim) {
    throw DimensionError("logistic loss: readout must match the state dimension");
  }
  const Truncated tr = trunc(phi, cfg.truncation);
  const WeightVector theta = model.weights(tr.theta);
  const Index m = theta.size();
  const std::size_t n = data.size();

  std::vector<double> losses(n);
  MatrixXd grads, readout_grads;
  const bool logistic = cfg.loss == Loss::logistic;
  if (with_grad) grads.resize(m, static_cast<Index>(n));
  if (with_grad && logistic) readout_grads.resize(model.readout.size() + 1, static_cast<Index>(n));

  parallel_chunks(n, cfg.jobs, [&](std::size_t lo, std::size_t hi) {
    FieldEvaluator ev(model.field.activation, theta);
    for (std::size_t i = lo; i < hi; ++i) {
      const FlowEndpoint end = flow_endpoint(ev, data.inputs[i], cfg.scheme, with_grad);
      if (cfg.loss == Loss::squared) {
        const VectorXd resid = data.targets[i] - end.x;
        losses[i] = resid.squaredNorm();
        if (with_grad) grads.col(static_cast<Index>(i)) = -2.0 * end.sens.transpose() * resid;
      } else {
        const double y = data.labels[i];
        const double score = model.readout.dot(end.x) + model.readout_bias;
        const double margin = y * score;
        // log(1 + exp(-margin)), evaluated stably
        losses[i] = margin > 0.0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
        if (with_grad) {
          const double dscore = -y / (1.0 + std::exp(margin));
          grads.col(static_cast<Index>(i)) = dscore * (end.sens.transpose() * model.readout);
          readout_grads.col(static_cast<Index>(i)) << dscore * end.x, dscore;
        }
      }
    }
  });

  RiskEvaluation out;
  const double inv_n = n ? 1.0 / static_cast<double>(n) : 0.0;
  out.data_term = pairwise_sum(losses) * inv_n;
  const RegularizerValue h = regularizer(phi, cfg.regularizer);
  out.penalty = cfg.regularizer.gamma * h.value;
  if (!std::isfinite(out.data_term)) throw NonFiniteError("risk: data term is not finite", 0);
  if (with_grad) {
    VectorXd g_theta = n ? VectorXd(pairwise_sum_cols(grads, 0, grads.cols()) * inv_n) : VectorXd::Zero(m);
    VectorXd g_phi = model.basis.size() == 0 ? g_theta : VectorXd(model.basis.transpose() * g_theta);
    out.grad = tr.jac * g_phi + cfg.regularizer.gamma * h.grad;
    if (logistic) {
      out.readout_grad = n ? VectorXd(pairwise_sum_cols(readout_grads, 0, n) * inv_n)
                           : VectorXd::Zero(model.readout.size() + 1);
    }
  }
  return out;
}

double risk(const Model& model, const VectorXd& phi, const LabeledDataset& data, const RiskConfig& cfg) {
  return evaluate_risk(model, phi, data, cfg, false).value();
}

VectorXd grad_risk(const Model& model, const VectorXd& phi, const LabeledDataset& data, const RiskConfig& cfg) {
  return evaluate_risk(model, phi, data, cfg, true).grad;
}

ConfinementReport confinement_probe(const Model& model, const LabeledDataset& data, const RiskConfig& cfg,
                                    const std::vector<double>& radii, std::size_t samples_per_radius,
                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ConfinementReport report;
  report.overall_max = -std::numeric_limits<double>::infinity();
  const Index k = model.param_count();
  for (double r : radii) {
    ConfinementRow row{r, -std::numeric_limits<double>::infinity()};
    for (std::size_t s = 0; s < samples_per_radius; ++s) {
      VectorXd phi(k);
      for (auto& e : phi) e = normal(rng);
      phi *= r / phi.norm();
      const VectorXd g = grad_risk(model, phi, data, cfg);
      row.max_ratio = std::max(row.max_ratio, -g.dot(phi) / (1.0 + phi.squaredNorm()));
    }
    report.overall_max = std::max(report.overall_max, row.max_ratio);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace dlab
