#include "dlab/sde.hpp"

#include "dlab/dataset.hpp"
#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dlab {

NoiseModel NoiseModel::isotropic(Index m, double scale, std::uint64_t seed) {
  return {scale * MatrixXd::Identity(m, m), seed};
}

void NoiseModel::validate() const {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) throw DimensionError("noise: sigma must be square");
  if (!sigma.allFinite()) throw std::invalid_argument("noise: sigma must be finite");
  if (sigma.isZero(0.0)) return;
  if (Eigen::ColPivHouseholderQR<MatrixXd>(sigma).rank() != sigma.rows()) {
    throw std::invalid_argument("noise: sigma must have full rank");
  }
}

VectorXd InitDistribution::sample(RandomStream& rng, Index m) const {
  if (radius < 0.0) throw std::invalid_argument("init: negative radius");
  if (center.size() && center.size() != m) throw DimensionError("init: center has the wrong dimension");
  VectorXd v(m);
  if (kind == InitKind::uniform_box) {
    for (auto& e : v) e = rng.uniform(-radius, radius);
  } else {
    for (auto& e : v) e = rng.normal();
    const double u = rng.uniform();
    v *= radius * std::pow(u, 1.0 / static_cast<double>(m)) / v.norm();
  }
  if (center.size()) v += center;
  return v;
}

VectorXd brownian_increment(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step, Index m) {
  const RandomStream rng(seed, 2 * path_index);
  const std::uint64_t per_step = static_cast<std::uint64_t>(m + 1) / 2;
  VectorXd xi(m);
  for (Index j = 0; j < m; j += 2) {
    const auto [z0, z1] = rng.normal_pair_at(step * per_step + static_cast<std::uint64_t>(j / 2));
    xi[j] = z0;
    if (j + 1 < m) xi[j + 1] = z1;
  }
  return xi;
}

VectorXd initial_weights(const InitDistribution& init, std::uint64_t seed, std::uint64_t path_index, Index m) {
  RandomStream rng(seed, 2 * path_index + 1);
  return init.sample(rng, m);
}

std::size_t sde_step_count(double T, double h) {
  if (!(h > 0.0) || !(T > 0.0) || h > T * (1.0 + 1e-12)) throw std::invalid_argument("sde: need 0 < h <= T");
  const double k = std::round(T / h);
  if (std::abs(k * h - T) > 1e-9 * T) throw std::invalid_argument("sde: h must divide T");
  return static_cast<std::size_t>(k);
}

namespace {

// Advances one path, calling visit(k, theta_k) for k = 0..K.
template <class Visit>
void advance(const Drift& drift, const NoiseModel& noise, VectorXd theta, std::size_t steps, double h,
             std::uint64_t path_index, Visit&& visit) {
  const Index m = theta.size();
  const double sqrt_h = std::sqrt(h);
  const bool noisy = !noise.sigma.isZero(0.0);
  VectorXd g(m);
  visit(std::size_t{0}, theta, VectorXd());
  for (std::size_t k = 0; k < steps; ++k) {
    drift(theta, g);
    theta -= h * g;
    VectorXd xi;
    if (noisy) {
      xi = brownian_increment(noise.seed, path_index, k, m);
      theta.noalias() += sqrt_h * (noise.sigma * xi);
    }
    if (!theta.allFinite()) throw NonFiniteError("euler_maruyama: state is not finite", k + 1);
    visit(k + 1, theta, xi);
  }
}

}  // namespace

SDEPath euler_maruyama(const Drift& drift, const NoiseModel& noise, const VectorXd& theta0, double T, double h,
                       std::uint64_t path_index, bool keep_increments) {
  noise.validate();
  if (theta0.size() != noise.dim()) throw DimensionError("euler_maruyama: theta0 and sigma disagree");
  const std::size_t steps = sde_step_count(T, h);
  SDEPath path;
  path.seed = noise.seed;
  path.path_index = path_index;
  path.times.reserve(steps + 1);
  path.theta.reserve(steps + 1);
  advance(drift, noise, theta0, steps, h, path_index, [&](std::size_t k, const VectorXd& th, const VectorXd& xi) {
    path.times.push_back(k == steps ? T : static_cast<double>(k) * h);
    path.theta.push_back(th);
    if (keep_increments && k > 0) path.increments.push_back(xi.size() ? xi : VectorXd::Zero(th.size()));
  });
  return path;
}

CoupledRun coupled_run(const Drift& drift_continuous, const Drift& drift_discrete, const NoiseModel& noise,
                       const InitDistribution& init, double T, double h, std::uint64_t path_index) {
  noise.validate();
  const VectorXd theta0 = initial_weights(init, noise.seed, path_index, noise.dim());
  CoupledRun run;
  run.continuous = euler_maruyama(drift_continuous, noise, theta0, T, h, path_index);
  run.discrete = euler_maruyama(drift_discrete, noise, theta0, T, h, path_index);
  for (std::size_t k = 0; k < run.continuous.theta.size(); ++k) {
    run.sup_dist = std::max(run.sup_dist, (run.continuous.theta[k] - run.discrete.theta[k]).norm());
  }
  return run;
}

double PolynomialTest::operator()(const VectorXd& theta) const {
  const double x = theta[component];
  double v = 0.0;
  for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) v = v * x + *it;
  return v;
}

namespace {

Estimate estimate(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  Estimate e;
  if (std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); })) {
    e.mean = xs.empty() ? 0.0 : xs.front();
    return e;
  }
  e.mean = pairwise_sum(xs) / n;
  std::vector<double> sq(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) sq[i] = (xs[i] - e.mean) * (xs[i] - e.mean);
  e.std_error = xs.size() > 1 ? std::sqrt(pairwise_sum(sq) / (n - 1.0) / n) : 0.0;
  return e;
}

Estimate abs_estimate(const std::vector<double>& xs) {
  Estimate e = estimate(xs);
  e.mean = std::abs(e.mean);
  return e;
}

std::optional<SlopeFit> try_slope(const std::vector<McRow>& rows, Estimate McRow::*field) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows) {
    if (r.n_steps > 0 && (r.*field).mean > 0.0) pts.emplace_back(r.n_steps, (r.*field).mean);
  }
  if (pts.size() < 3) return std::nullopt;
  return fit_slope(pts);
}

}  // namespace

McTable mc_statistics(const ProcessFactory& factory, const McStudySpec& spec) {
  if (spec.n_seeds < 2) throw std::invalid_argument("mc_statistics: need at least two seeds");
  spec.noise.validate();
  const Index m = spec.noise.dim();
  const std::size_t steps = sde_step_count(spec.T, spec.h);
  const std::size_t n_n = spec.n_list.size();
  const std::size_t n_t = spec.tests.size();
  for (int n : spec.n_list) {
    if (n < 1) throw std::invalid_argument("mc_statistics: N must be positive");
  }

  const Drift cont_drift = factory.drift(0);
  std::vector<Drift> disc_drift;
  for (int n : spec.n_list) disc_drift.push_back(factory.drift(n));

  // Per seed: continuous objective, then per N: diff vector, risk diff, sup^2, test diffs.
  std::vector<double> cont_obj(spec.n_seeds);
  std::vector<std::vector<VectorXd>> diff(n_n, std::vector<VectorXd>(spec.n_seeds));
  std::vector<std::vector<double>> risk_diff(n_n, std::vector<double>(spec.n_seeds));
  std::vector<std::vector<double>> sup_sq(n_n, std::vector<double>(spec.n_seeds));
  std::vector<std::vector<std::vector<double>>> weak(n_n, std::vector<std::vector<double>>(n_t, std::vector<double>(spec.n_seeds)));

  parallel_chunks(spec.n_seeds, spec.jobs, [&](std::size_t lo, std::size_t hi) {
    std::vector<VectorXd> cont_path(steps + 1);
    for (std::size_t s = lo; s < hi; ++s) {
      const VectorXd theta0 = initial_weights(spec.init, spec.noise.seed, s, m);
      advance(cont_drift, spec.noise, theta0, steps, spec.h, s,
              [&](std::size_t k, const VectorXd& th, const VectorXd&) { cont_path[k] = th; });
      const VectorXd& end = cont_path.back();
      cont_obj[s] = factory.objective(0, end);
      for (std::size_t i = 0; i < n_n; ++i) {
        double sup = 0.0;
        VectorXd last;
        advance(disc_drift[i], spec.noise, theta0, steps, spec.h, s,
                [&](std::size_t k, const VectorXd& th, const VectorXd&) {
                  sup = std::max(sup, (cont_path[k] - th).squaredNorm());
                  if (k == steps) last = th;
                });
        diff[i][s] = end - last;
        risk_diff[i][s] = cont_obj[s] - factory.objective(spec.n_list[i], last);
        sup_sq[i][s] = sup;
        for (std::size_t t = 0; t < n_t; ++t) weak[i][t][s] = spec.tests[t](end) - spec.tests[t](last);
      }
    }
  });

  for (std::size_t s = 0; s < spec.n_seeds; ++s) {
    bool finite = std::isfinite(cont_obj[s]);
    for (std::size_t i = 0; i < n_n; ++i) finite = finite && std::isfinite(risk_diff[i][s]) && std::isfinite(sup_sq[i][s]);
    if (!finite) throw NonFiniteError("mc_statistics: objective overflow on path " + std::to_string(s), steps);
  }

  McTable table;
  table.seeds = spec.n_seeds;
  table.continuous_risk = estimate(cont_obj);
  for (std::size_t i = 0; i < n_n; ++i) {
    McRow row;
    row.n_steps = spec.n_list[i];
    double norm_sq = 0.0, var = 0.0;
    for (Index j = 0; j < m; ++j) {
      std::vector<double> comp(spec.n_seeds);
      for (std::size_t s = 0; s < spec.n_seeds; ++s) comp[s] = diff[i][s][j];
      const Estimate e = estimate(comp);
      norm_sq += e.mean * e.mean;
      var += e.std_error * e.std_error;
    }
    row.mean_gap = {std::sqrt(norm_sq), std::sqrt(var)};
    row.risk_gap = abs_estimate(risk_diff[i]);
    row.sup_sq = estimate(sup_sq[i]);
    for (std::size_t t = 0; t < n_t; ++t) row.weak.push_back(abs_estimate(weak[i][t]));
    table.rows.push_back(std::move(row));
  }
  table.mean_gap_slope = try_slope(table.rows, &McRow::mean_gap);
  table.risk_gap_slope = try_slope(table.rows, &McRow::risk_gap);
  table.sup_sq_slope = try_slope(table.rows, &McRow::sup_sq);
  return table;
}

void write_mc_csv(const McTable& table, const std::vector<PolynomialTest>& tests, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "N,statistic,estimate,stderr\n";
  out << "continuous,risk," << format_double(table.continuous_risk.mean) << ','
      << format_double(table.continuous_risk.std_error) << '\n';
  for (const auto& r : table.rows) {
    const auto line = [&](const std::string& name, const Estimate& e) {
      out << r.n_steps << ',' << name << ',' << format_double(e.mean) << ',' << format_double(e.std_error) << '\n';
    };
    line("mean_gap", r.mean_gap);
    line("risk_gap", r.risk_gap);
    line("sup_sq", r.sup_sq);
    for (std::size_t t = 0; t < r.weak.size(); ++t) line("weak_" + tests.at(t).name, r.weak[t]);
  }
}

}  // namespace dlab
