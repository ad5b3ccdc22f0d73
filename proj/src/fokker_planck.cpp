#include "dlab/fokker_planck.hpp"

#include "dlab/dataset.hpp"
#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace dlab {

namespace {

// Bernoulli function x / (e^x - 1).
double bernoulli(double x) {
  if (std::abs(x) < 1e-10) return 1.0 - 0.5 * x;
  return x / std::expm1(x);
}

bool same_grid(const Grid& a, const Grid& b) {
  return a.dim == b.dim && a.half_width == b.half_width && a.cells_per_axis == b.cells_per_axis;
}

std::size_t step_count(double T, double dt) {
  if (!(dt > 0.0) || T < 0.0) throw std::invalid_argument("fp_solve: need dt > 0 and T >= 0");
  const double k = std::round(T / dt);
  if (std::abs(k * dt - T) > 1e-9 * std::max(T, dt)) throw std::invalid_argument("fp_solve: dt must divide T");
  return static_cast<std::size_t>(k);
}

double outer_layer_mass(const Grid& g, const VectorXd& m) {
  const int n = g.cells_per_axis;
  double acc = 0.0;
  for (Index k = 0; k < m.size(); ++k) {
    const int i = static_cast<int>(k % n);
    const int j = static_cast<int>(k / n);
    bool edge = i < 2 || i >= n - 2;
    if (g.dim == 2) edge = edge || j < 2 || j >= n - 2;
    if (edge) acc += m[k];
  }
  return acc;
}

}  // namespace

void Grid::validate() const {
  if (dim != 1 && dim != 2) throw std::invalid_argument("grid: dimension must be 1 or 2");
  if (!(half_width > 0.0)) throw std::invalid_argument("grid: half width must be positive");
  if (cells_per_axis < 2 || cells_per_axis % 2) throw std::invalid_argument("grid: cells per axis must be even");
}

Index Grid::cell_count() const {
  return dim == 1 ? cells_per_axis : static_cast<Index>(cells_per_axis) * cells_per_axis;
}

VectorXd Grid::point(Index k) const {
  VectorXd x(dim);
  x[0] = center(static_cast<int>(k % cells_per_axis));
  if (dim == 2) x[1] = center(static_cast<int>(k / cells_per_axis));
  return x;
}

PotentialField PotentialField::from_function(const Grid& grid, const std::function<double(const VectorXd&)>& v,
                                             std::string provenance) {
  grid.validate();
  PotentialField out{grid, VectorXd(grid.cell_count()), std::move(provenance)};
  for (Index k = 0; k < out.values.size(); ++k) out.values[k] = v(grid.point(k));
  if (!out.values.allFinite()) throw std::invalid_argument("potential is not finite on the grid");
  return out;
}

double DensityField::total() const { return pairwise_sum({masses.data(), static_cast<std::size_t>(masses.size())}); }

void DensityField::validate(double tol) const {
  grid.validate();
  if (masses.size() != grid.cell_count()) throw DimensionError("density: mass vector does not match the grid");
  if (!masses.allFinite() || (masses.array() < 0.0).any()) throw std::invalid_argument("density: negative or non-finite mass");
  if (std::abs(total() - 1.0) > tol) throw std::invalid_argument("density: masses do not sum to one");
}

DensityField DensityField::from_function(const Grid& grid, const std::function<double(const VectorXd&)>& density) {
  grid.validate();
  DensityField p{grid, VectorXd(grid.cell_count()), 0.0};
  for (Index k = 0; k < p.masses.size(); ++k) p.masses[k] = std::max(0.0, density(grid.point(k)));
  const double total = p.total();
  if (!(total > 0.0)) throw std::invalid_argument("density: no mass on the grid");
  p.masses /= total;
  return p;
}

DensityField stationary_density(const PotentialField& v) {
  const double vmin = v.values.minCoeff();
  DensityField p{v.grid, (-(v.values.array() - vmin)).exp().matrix(), 0.0};
  p.masses /= p.total();
  return p;
}

FokkerPlanckSolver::FokkerPlanckSolver(const PotentialField& v, double dt) : v_(v), dt_(dt) {
  v.grid.validate();
  if (v.values.size() != v.grid.cell_count()) throw DimensionError("solver: potential does not match the grid");
  if (!(dt > 0.0)) throw std::invalid_argument("solver: dt must be positive");
  const Grid& g = v.grid;
  const int n = g.cells_per_axis;
  const double inv_d2 = 1.0 / (g.delta() * g.delta());
  std::vector<Eigen::Triplet<double>> trip;
  const auto face = [&](Index a, Index b) {
    const double w = v.values[b] - v.values[a];
    const double fwd = bernoulli(w) * inv_d2;    // a -> b
    const double back = bernoulli(-w) * inv_d2;  // b -> a
    trip.emplace_back(b, a, fwd);
    trip.emplace_back(a, a, -fwd);
    trip.emplace_back(a, b, back);
    trip.emplace_back(b, b, -back);
  };
  const int rows = g.dim == 2 ? n : 1;
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i + 1 < n; ++i) face(static_cast<Index>(j) * n + i, static_cast<Index>(j) * n + i + 1);
  }
  if (g.dim == 2) {
    for (int j = 0; j + 1 < n; ++j) {
      for (int i = 0; i < n; ++i) face(static_cast<Index>(j) * n + i, static_cast<Index>(j + 1) * n + i);
    }
  }
  const Index cells = g.cell_count();
  gen_.resize(cells, cells);
  gen_.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseMatrix<double> sys(cells, cells);
  sys.setIdentity();
  sys -= dt * gen_;
  sys.makeCompressed();
  lu_.analyzePattern(sys);
  lu_.factorize(sys);
  if (lu_.info() != Eigen::Success) throw std::runtime_error("solver: factorization failed");
}

void FokkerPlanckSolver::step(VectorXd& masses) const {
  masses = lu_.solve(masses);
  if (lu_.info() != Eigen::Success) throw std::runtime_error("solver: linear solve failed");
  // Round-off can leave -1e-300 style residue; the exact update is nonnegative.
  masses = masses.cwiseMax(0.0);
}

FpResult fp_solve(const FokkerPlanckSolver& solver, const DensityField& p0, double T, const FpObserver& observe) {
  if (!same_grid(p0.grid, solver.potential().grid)) throw DimensionError("fp_solve: density and potential grids differ");
  p0.validate(1e-9);
  const std::size_t steps = step_count(T, solver.dt());
  FpResult res{p0, outer_layer_mass(p0.grid, p0.masses), false};
  if (observe) observe(res.density);
  const double t0 = p0.time;
  for (std::size_t k = 1; k <= steps; ++k) {
    solver.step(res.density.masses);
    res.density.time = t0 + static_cast<double>(k) * solver.dt();
    res.boundary_mass = std::max(res.boundary_mass, outer_layer_mass(p0.grid, res.density.masses));
    if (observe) observe(res.density);
  }
  res.density.time = t0 + T;
  res.boundary_warning = res.boundary_mass > kBoundaryMassLimit;
  return res;
}

FpResult fp_solve(const PotentialField& v, const DensityField& p0, double T, double dt) {
  return fp_solve(FokkerPlanckSolver(v, dt), p0, T);
}

double gibbs_chi2(const DensityField& p, const DensityField& gibbs) {
  if (p.masses.size() != gibbs.masses.size()) throw DimensionError("gibbs_chi2: size mismatch");
  std::vector<double> terms(static_cast<std::size_t>(p.masses.size()));
  for (Index k = 0; k < p.masses.size(); ++k) {
    const double pi = gibbs.masses[k];
    const double diff = p.masses[k] - pi;
    terms[static_cast<std::size_t>(k)] = pi > 0.0 ? diff * diff / pi : 0.0;
  }
  return pairwise_sum(terms);
}

RelaxationFit relaxation_rate(const FokkerPlanckSolver& solver, const DensityField& p0, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("relaxation_rate: T must be positive");
  const DensityField gibbs = stationary_density(solver.potential());
  RelaxationFit fit;
  fp_solve(solver, p0, T, [&](const DensityField& p) { fit.samples.emplace_back(p.time - p0.time, gibbs_chi2(p, gibbs)); });
  std::vector<double> ts, logs;
  bool negligible = true;
  for (const auto& [t, v] : fit.samples) {
    if (v > 1e-24) negligible = false;
    if (t >= 0.5 * T - 1e-12 && v > 0.0) {
      ts.push_back(t);
      logs.push_back(std::log(v));
    }
  }
  if (negligible) {
    fit.converged = true;
    return fit;
  }
  if (ts.size() < 3) throw FitError("relaxation_rate: too few samples in [T/2, T]");
  const SlopeFit line = fit_line(ts, logs);
  fit.r2 = line.r2;
  if (line.r2 < 0.95) throw FitError("relaxation_rate: exponential fit rejected (R^2 = " + format_double(line.r2) + ")");
  fit.rate = -line.slope;
  return fit;
}

namespace {

template <class Term>
double annulus_sum(const DensityField& p, double inner, double outer, Term term) {
  std::vector<double> terms;
  for (Index k = 0; k < p.masses.size(); ++k) {
    const double r = p.grid.point(k).norm();
    if (r >= inner && r < outer) terms.push_back(term(k));
  }
  return pairwise_sum(terms);
}

}  // namespace

double tail_mass(const DensityField& p, double inner, double outer) {
  return annulus_sum(p, inner, outer, [&](Index k) { return p.masses[k]; });
}

double tail_mass_weighted(const DensityField& p, double inner, double outer, const VectorXd& weight) {
  if (weight.size() != p.masses.size()) throw DimensionError("tail_mass_weighted: weight size mismatch");
  return annulus_sum(p, inner, outer, [&](Index k) { return p.masses[k] * weight[k]; });
}

double tail_l2_gibbs(const DensityField& p, const PotentialField& v, double inner, double outer) {
  if (!same_grid(p.grid, v.grid)) throw DimensionError("tail_l2_gibbs: grid mismatch");
  const double vol = std::pow(p.grid.delta(), p.grid.dim);
  return annulus_sum(p, inner, outer, [&](Index k) { return p.masses[k] * p.masses[k] / vol * std::exp(v.values[k]); });
}

TailProfile tail_profile(const DensityField& p, double support_radius,
                         const std::vector<std::pair<double, double>>& annuli) {
  TailProfile prof;
  for (const auto& [inner, outer] : annuli) {
    if (!(inner > support_radius && outer > inner)) throw std::invalid_argument("tail_profile: bad annulus");
    prof.distance.push_back(inner - support_radius);
    prof.mass.push_back(tail_mass(p, inner, outer));
  }
  std::vector<double> d2, logm;
  for (std::size_t i = 0; i < prof.mass.size(); ++i) {
    if (!(prof.mass[i] > 0.0)) throw FitError("tail_profile: empty annulus");
    d2.push_back(prof.distance[i] * prof.distance[i]);
    logm.push_back(std::log(prof.mass[i]));
  }
  prof.fit = fit_line(d2, logm);
  return prof;
}

GapTable density_gap_study(const std::function<PotentialField(int)>& potential, const VectorXd& penalty_weight,
                           const DensityField& p0, const GapStudySpec& spec) {
  if (spec.n_list.empty()) throw std::invalid_argument("density_gap_study: empty N list");
  const PotentialField v = potential(0);
  if (penalty_weight.size() != v.values.size()) throw DimensionError("density_gap_study: weight size mismatch");
  const DensityField p = fp_solve(FokkerPlanckSolver(v, spec.dt), p0, spec.T).density;
  const VectorXd w = (v.values.array() / 4.0).exp().matrix();

  GapTable table;
  table.rows.resize(spec.n_list.size());
  parallel_chunks(spec.n_list.size(), spec.jobs, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const int n = spec.n_list[i];
      if (n < 1) throw std::invalid_argument("density_gap_study: N must be positive");
      const DensityField pn = fp_solve(FokkerPlanckSolver(potential(n), spec.dt), p0, spec.T).density;
      std::vector<double> gap, gap_pen, gap_ball, bound;
      for (Index k = 0; k < w.size(); ++k) {
        const double d = std::abs(p.masses[k] - pn.masses[k]);
        gap.push_back(w[k] * d);
        gap_pen.push_back(penalty_weight[k] * d);
        if (p.grid.point(k).norm() <= spec.ball_radius) gap_ball.push_back(w[k] * d);
        bound.push_back(w[k] * (p.masses[k] + pn.masses[k]));
      }
      table.rows[i] = {n, pairwise_sum(gap), pairwise_sum(gap_pen), pairwise_sum(gap_ball), pairwise_sum(bound)};
    }
  });
  std::vector<std::pair<double, double>> pts, pts_pen;
  for (const auto& r : table.rows) {
    if (r.gap > 0.0) pts.emplace_back(r.n_steps, r.gap);
    if (r.gap_penalty > 0.0) pts_pen.emplace_back(r.n_steps, r.gap_penalty);
  }
  if (pts.size() >= 3) table.slope = fit_slope(pts);
  if (pts_pen.size() >= 3) table.slope_penalty = fit_slope(pts_pen);
  return table;
}

void write_density_csv(const DensityField& p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << (p.grid.dim == 2 ? "x_0,x_1,mass\n" : "x_0,mass\n");
  for (Index k = 0; k < p.masses.size(); ++k) {
    const VectorXd x = p.grid.point(k);
    for (Index j = 0; j < x.size(); ++j) out << format_double(x[j]) << ',';
    out << format_double(p.masses[k]) << '\n';
  }
}

}  // namespace dlab
