#include "dlab/classifier.hpp"

#include "dlab/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dlab {

void ClassifierSpec::validate() const {
  if (hidden < 1 || iterations < 0 || batch < 1) throw std::invalid_argument("classifier: invalid sizes");
  if (!(learning_rate > 0.0) || momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("classifier: invalid optimizer settings");
  }
  if (!(lambda_cap > 0.0) || gamma < 0.0 || lam <= 0.0 || rho0 < 0.0) {
    throw std::invalid_argument("classifier: invalid penalty settings");
  }
}

namespace {

RiskConfig classifier_risk(const ClassifierSpec& spec, int n_steps) {
  RiskConfig cfg;
  cfg.loss = Loss::logistic;
  cfg.truncation.lambda_cap = spec.lambda_cap;
  cfg.regularizer = {spec.gamma, spec.lam, spec.rho0};
  cfg.scheme = FlowScheme::euler(n_steps);
  cfg.jobs = spec.jobs;
  return cfg;
}

}  // namespace

TrainedClassifier train_classifier(const LabeledDataset& data, int n_steps, const ClassifierSpec& spec,
                                   std::uint64_t stream) {
  spec.validate();
  if (!data.is_classification() || data.empty()) throw std::invalid_argument("classifier: need labelled data");
  if (n_steps < 1) throw std::invalid_argument("classifier: depth must be positive");
  const Index d = data.input_dim();
  const VectorFieldSpec field{spec.activation, {d, spec.hidden}};
  TrainedClassifier clf{Model::full(field), VectorXd(field.shape.param_count()), n_steps, spec.lambda_cap};

  RandomStream rng(spec.seed, stream);
  for (auto& e : clf.phi) e = spec.init_scale * rng.normal();
  for (auto& e : clf.model.readout) e = rng.normal() / std::sqrt(static_cast<double>(d));
  clf.model.readout_bias = 0.0;

  const RiskConfig cfg = classifier_risk(spec, n_steps);
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(spec.batch), data.size());
  VectorXd vel_phi = VectorXd::Zero(clf.phi.size());
  VectorXd vel_head = VectorXd::Zero(d + 1);
  std::vector<std::size_t> rows(batch);
  for (int it = 0; it < spec.iterations; ++it) {
    for (auto& r : rows) r = static_cast<std::size_t>(rng.below(data.size()));
    const RiskEvaluation e = evaluate_risk(clf.model, clf.phi, data.subset(rows), cfg, true);
    vel_phi = spec.momentum * vel_phi - spec.learning_rate * e.grad;
    vel_head = spec.momentum * vel_head - spec.learning_rate * e.readout_grad;
    clf.phi += vel_phi;
    clf.model.readout += vel_head.head(d);
    clf.model.readout_bias += vel_head[d];
  }
  return clf;
}

ClassificationMetrics evaluate_classifier(const TrainedClassifier& clf, const LabeledDataset& data) {
  if (!data.is_classification() || data.empty()) throw std::invalid_argument("classifier: need labelled data");
  ClassificationMetrics m;
  RiskConfig cfg;
  cfg.loss = Loss::logistic;
  cfg.scheme = FlowScheme::euler(clf.n_steps);
  cfg.regularizer.gamma = 0.0;
  cfg.truncation.lambda_cap = clf.lambda_cap;
  m.cross_entropy = evaluate_risk(clf.model, clf.phi, data, cfg, false).data_term;
  FieldEvaluator ev(clf.model.field.activation, clf.model.weights(trunc(clf.phi, cfg.truncation).theta));
  double sq = 0.0, correct = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const VectorXd x = flow_endpoint(ev, data.inputs[i], cfg.scheme, false).x;
    const double score = clf.model.readout.dot(x) + clf.model.readout_bias;
    const double y = data.labels[i];
    const double pred = std::tanh(0.5 * score);  // 2 sigmoid(score) - 1
    sq += (y - pred) * (y - pred);
    correct += (score >= 0.0) == (y > 0.0);
  }
  m.squared = sq / static_cast<double>(data.size());
  m.accuracy = correct / static_cast<double>(data.size());
  return m;
}

std::vector<CvRow> cross_validate(const LabeledDataset& data, const std::vector<int>& n_list, int folds,
                                  const ClassifierSpec& spec) {
  if (folds < 2 || static_cast<std::size_t>(folds) > data.size()) throw std::invalid_argument("cross_validate: bad fold count");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  RandomStream shuffle(spec.seed, 1u << 20);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

  std::vector<CvRow> rows;
  for (int n : n_list) {
    CvRow row;
    row.n_steps = n;
    for (int f = 0; f < folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < order.size(); ++i) {
        (static_cast<int>(i % folds) == f ? test : train).push_back(order[i]);
      }
      FoldOutcome out;
      out.fold = f;
      try {
        // Same initial draw for every depth within a fold.
        const TrainedClassifier clf = train_classifier(data.subset(train), n, spec, static_cast<std::uint64_t>(f));
        out.test = evaluate_classifier(clf, data.subset(test));
        if (!std::isfinite(out.test.cross_entropy)) throw std::runtime_error("non-finite test loss");
      } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
      }
      row.folds.push_back(out);
    }
    std::vector<ClassificationMetrics> ok;
    for (const auto& f : row.folds) {
      if (f.ok) ok.push_back(f.test);
    }
    const double k = static_cast<double>(ok.size());
    for (const auto& m : ok) {
      row.mean.cross_entropy += m.cross_entropy / k;
      row.mean.squared += m.squared / k;
      row.mean.accuracy += m.accuracy / k;
    }
    if (ok.size() > 1) {
      for (const auto& m : ok) {
        row.spread.cross_entropy += std::pow(m.cross_entropy - row.mean.cross_entropy, 2) / (k - 1);
        row.spread.squared += std::pow(m.squared - row.mean.squared, 2) / (k - 1);
        row.spread.accuracy += std::pow(m.accuracy - row.mean.accuracy, 2) / (k - 1);
      }
      row.spread.cross_entropy = std::sqrt(row.spread.cross_entropy);
      row.spread.squared = std::sqrt(row.spread.squared);
      row.spread.accuracy = std::sqrt(row.spread.accuracy);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace dlab
