#include "dlab/fokker_planck.hpp"

#include "dlab/errors.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace dlab;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Exact cell masses of N(mean, s^2) on a 1-D grid.
VectorXd gaussian_cells(const Grid& g, double mean, double s) {
  VectorXd m(g.cells_per_axis);
  for (int i = 0; i < g.cells_per_axis; ++i) {
    const double a = -g.half_width + i * g.delta();
    m[i] = normal_cdf((a + g.delta() - mean) / s) - normal_cdf((a - mean) / s);
  }
  return m;
}

double l1(const VectorXd& a, const VectorXd& b) { return (a - b).lpNorm<1>(); }

PotentialField quadratic(const Grid& g) {
  return PotentialField::from_function(g, [](const VectorXd& x) { return 0.5 * x.squaredNorm(); }, "analytic");
}

PotentialField random_potential(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const double a = nd(rng), b = nd(rng), c = nd(rng);
  return PotentialField::from_function(
      g, [&](const VectorXd& x) { return 0.3 * x.squaredNorm() + a * std::sin(x[0]) + b * std::cos(2 * x.sum()) + c; },
      "analytic");
}

DensityField box_density(const Grid& g, double center, double half) {
  return DensityField::from_function(g, [&](const VectorXd& x) {
    return (x.array() - center).abs().maxCoeff() < half ? 1.0 : 0.0;
  });
}

}  // namespace

TEST_CASE("steps conserve mass and positivity") {
  for (int dim : {1, 2}) {
    const Grid g{dim, 5.0, dim == 1 ? 256 : 48};
    const PotentialField v = random_potential(g, 10 + dim);
    const FokkerPlanckSolver solver(v, 0.05);
    VectorXd m = box_density(g, 0.7, 0.6).masses;
    for (int k = 0; k < 40; ++k) {
      const double before = m.sum();
      solver.step(m);
      CHECK(std::abs(m.sum() - before) <= 1e-12);
      CHECK(m.minCoeff() >= 0.0);
    }
    // Generator columns sum to zero and off-diagonals are nonnegative.
    const MatrixXd a = MatrixXd(solver.generator());
    CHECK(a.colwise().sum().cwiseAbs().maxCoeff() < 1e-9 * a.cwiseAbs().maxCoeff());
    double worst = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = 0; j < a.cols(); ++j) {
        if (i != j) worst = std::min(worst, a(i, j));
      }
    }
    CHECK(worst >= 0.0);
  }
}

TEST_CASE("the discrete Gibbs state is stationary") {
  for (int dim : {1, 2}) {
    const Grid g{dim, 4.0, dim == 1 ? 200 : 40};
    const PotentialField v = random_potential(g, 20 + dim);
    const DensityField pi = stationary_density(v);
    const FpResult r = fp_solve(v, pi, 0.5, 0.1);
    CHECK(l1(r.density.masses, pi.masses) <= 1e-10);
  }
}

TEST_CASE("stationary density examples") {
  const Grid g{1, 8.0, 1024};
  const PotentialField flat = PotentialField::from_function(g, [](const VectorXd&) { return 3.0; }, "analytic");
  const DensityField u = stationary_density(flat);
  CHECK((u.masses.array() - 1.0 / 1024).abs().maxCoeff() < 1e-15);

  const DensityField n = stationary_density(quadratic(g));
  CHECK(l1(n.masses, gaussian_cells(g, 0.0, 1.0)) <= 1e-4);

  // A shift by a whole number of cells shifts the masses.
  const int shift = 40;
  const double a = shift * g.delta();
  const PotentialField moved =
      PotentialField::from_function(g, [&](const VectorXd& x) { return 0.5 * (x[0] - a) * (x[0] - a); }, "analytic");
  const DensityField nm = stationary_density(moved);
  for (int i = 0; i + shift < 1024; ++i) CHECK(std::abs(nm.masses[i + shift] - n.masses[i]) < 1e-15);

  // Underflow guard: a huge offset in V does not matter.
  const PotentialField big =
      PotentialField::from_function(g, [](const VectorXd& x) { return 5000.0 + 0.5 * x.squaredNorm(); }, "analytic");
  CHECK(l1(stationary_density(big).masses, n.masses) < 1e-14);
}

TEST_CASE("pure diffusion follows the heat kernel") {
  const Grid g{1, 8.0, 1024};
  const PotentialField zero = PotentialField::from_function(g, [](const VectorXd&) { return 0.0; }, "analytic");
  const double s0 = 0.1, T = 0.5;
  const DensityField p0 = DensityField::from_function(g, [&](const VectorXd& x) { return std::exp(-x[0] * x[0] / (2 * s0 * s0)); });
  const FpResult r = fp_solve(zero, p0, T, 1e-4);
  const double s = std::sqrt(s0 * s0 + 2 * T);
  CHECK(l1(r.density.masses, gaussian_cells(g, 0.0, s)) <= 1e-3);
  CHECK_FALSE(r.boundary_warning);
  CHECK(r.density.time == T);

  // Annulus mass against the error-function tail.
  const double want = 2.0 * (normal_cdf(2.0 / s) - normal_cdf(1.0 / s));
  CHECK(std::abs(tail_mass(r.density, 1.0, 2.0) - want) <= 1e-3);
}

TEST_CASE("quadratic potential relaxes to the standard normal") {
  const Grid g{1, 8.0, 1024};
  const FpResult r = fp_solve(quadratic(g), box_density(g, 1.0, 0.5), 15.0, 0.01);
  CHECK(l1(r.density.masses, gaussian_cells(g, 0.0, 1.0)) <= 1e-3);
}

TEST_CASE("even data stay even") {
  for (int dim : {1, 2}) {
    const Grid g{dim, 4.0, dim == 1 ? 128 : 32};
    const PotentialField v = PotentialField::from_function(
        g, [](const VectorXd& x) { return 0.25 * x.squaredNorm() * x.squaredNorm() - x.squaredNorm(); }, "analytic");
    const DensityField p0 = box_density(g, 0.0, 1.0);
    const DensityField p = fp_solve(v, p0, 1.0, 0.05).density;
    const int n = g.cells_per_axis;
    for (Index k = 0; k < p.masses.size(); ++k) {
      const int i = static_cast<int>(k % n), j = static_cast<int>(k / n);
      const Index mirror = dim == 1 ? n - 1 - i : static_cast<Index>(n - 1 - j) * n + (n - 1 - i);
      CHECK(std::abs(p.masses[k] - p.masses[mirror]) <= 1e-12);
    }
  }
}

TEST_CASE("relaxation rate of the quadratic potential") {
  const Grid g{1, 8.0, 1024};
  const FokkerPlanckSolver solver(quadratic(g), 1e-3);

  // Oracle: the symmetrized generator is -d^2/dx^2 + x^2/4 - 1/2; its first
  // nonzero eigenvalue is the spectral gap, and the squared distance decays at twice it.
  const int n = 2000;
  const double L = 10.0, h = 2 * L / (n + 1);
  MatrixXd schr = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double x = -L + (i + 1) * h;
    schr(i, i) = 2.0 / (h * h) + x * x / 4.0 - 0.5;
    if (i + 1 < n) schr(i, i + 1) = schr(i + 1, i) = -1.0 / (h * h);
  }
  const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(schr, Eigen::EigenvaluesOnly).eigenvalues();
  CHECK(std::abs(ev[0]) < 1e-4);
  const double gap = ev[1] - ev[0];

  const auto bump = [&](double eps) {
    const DensityField pi = stationary_density(solver.potential());
    DensityField p = pi;
    for (int i = 0; i < 1024; ++i) {
      const double x = g.center(i);
      p.masses[i] *= 1.0 + eps * (std::tanh(x) + 0.5 * std::tanh(x * x - 1.0));
    }
    p.masses /= p.total();
    return p;
  };
  const RelaxationFit one = relaxation_rate(solver, bump(0.2), 4.0);
  const RelaxationFit two = relaxation_rate(solver, bump(0.4), 4.0);
  REQUIRE(one.rate);
  REQUIRE(two.rate);
  CHECK(one.r2 >= 0.95);
  CHECK(std::abs(*one.rate - 2.0 * gap) <= 0.1 * 2.0 * gap);
  CHECK(std::abs(*one.rate - *two.rate) <= 0.005 * *one.rate);

  const RelaxationFit still = relaxation_rate(solver, stationary_density(solver.potential()), 1.0);
  CHECK(still.converged);
  CHECK_FALSE(still.rate);
}

TEST_CASE("tails of a compactly supported start") {
  const Grid g{1, 8.0, 1024};
  const DensityField p0 = box_density(g, 0.0, 0.5);
  CHECK(tail_mass(p0, 1.0, 3.0) == 0.0);
  const FokkerPlanckSolver solver(quadratic(g), 1e-3);
  const DensityField p = fp_solve(solver, p0, 0.25).density;
  const TailProfile prof = tail_profile(p, 0.5, {{1.0, 1.25}, {1.5, 1.75}, {2.0, 2.25}});
  CHECK(prof.fit.slope < 0.0);
  CHECK(prof.fit.r2 >= 0.98);

  VectorXd ones = VectorXd::Ones(1024);
  CHECK(tail_mass_weighted(p, 1.0, 2.0, ones) == doctest::Approx(tail_mass(p, 1.0, 2.0)).epsilon(1e-14));

  // For the Gibbs density the integral of p^2 e^V is 1 / Z with Z = sqrt(2 pi).
  const DensityField pi = stationary_density(solver.potential());
  CHECK(tail_l2_gibbs(pi, solver.potential(), 0.0, 100.0) == doctest::Approx(1.0 / std::sqrt(2 * M_PI)).epsilon(1e-4));
}

TEST_CASE("weighted L2 growth under exponential ramps") {
  // d/dt of the integral of e^{2 a psi} p^2 e^V is at most 2 a^2 |psi'|^2 times itself.
  const Grid g{1, 8.0, 1024};
  const PotentialField v = quadratic(g);
  const FokkerPlanckSolver solver(v, 1e-3);
  const DensityField p0 = box_density(g, -0.5, 0.5);
  const double t = 0.5, alpha = 1.0;
  const DensityField p = fp_solve(solver, p0, t).density;
  double fitted = 0.0;
  for (double width : {0.5, 1.0, 2.0}) {
    VectorXd w(1024);
    for (int i = 0; i < 1024; ++i) w[i] = std::exp(2 * alpha * std::clamp(g.center(i), -width, width));
    const auto weighted = [&](const DensityField& q) {
      double acc = 0.0;
      for (int i = 0; i < 1024; ++i) acc += q.masses[i] * q.masses[i] / g.delta() * std::exp(v.values[i]) * w[i];
      return acc;
    };
    const double growth = std::log(weighted(p) / weighted(p0));
    fitted = std::max(fitted, growth / (alpha * alpha * t));
  }
  CHECK(fitted <= 2.0);
}

TEST_CASE("density gap study bookkeeping") {
  const Grid g{1, 6.0, 256};
  const DensityField p0 = box_density(g, 0.0, 1.0);
  const auto same = [&](int) { return quadratic(g); };
  const VectorXd w = VectorXd::Ones(256);
  GapStudySpec spec;
  spec.n_list = {2, 4, 8};
  spec.dt = 0.01;
  const GapTable t0 = density_gap_study(same, w, p0, spec);
  for (const auto& r : t0.rows) CHECK(r.gap == 0.0);
  CHECK_FALSE(t0.slope);

  const auto shifted = [&](int n) {
    return PotentialField::from_function(g, [&](const VectorXd& x) {
      const double a = n ? 1.0 / n : 0.0;
      return 0.5 * (x[0] - a) * (x[0] - a);
    }, "analytic");
  };
  const GapTable t1 = density_gap_study(shifted, w, p0, spec);
  for (const auto& r : t1.rows) {
    CHECK(r.gap > 0.0);
    CHECK(r.gap <= r.bound);
    CHECK(r.gap_ball <= r.gap);
  }
  REQUIRE(t1.slope);
  CHECK(t1.slope->slope < -0.8);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS((Grid{1, 1.0, 7}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Grid{3, 1.0, 8}.validate()), std::invalid_argument);
  const Grid g{1, 4.0, 64};
  const PotentialField v = quadratic(g);
  const DensityField p0 = box_density(g, 0.0, 1.0);
  CHECK_THROWS_AS(fp_solve(v, p0, 1.0, 0.3), std::invalid_argument);
  const DensityField other = box_density(Grid{1, 4.0, 32}, 0.0, 1.0);
  CHECK_THROWS_AS(fp_solve(v, other, 1.0, 0.5), DimensionError);
  DensityField bad = p0;
  bad.masses[0] = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("boundary monitor flags mass at the edge") {
  const Grid g{1, 2.0, 64};
  const PotentialField zero = PotentialField::from_function(g, [](const VectorXd&) { return 0.0; }, "analytic");
  const FpResult r = fp_solve(zero, box_density(g, 0.0, 0.5), 1.0, 0.05);
  CHECK(r.boundary_warning);
}

TEST_CASE("density csv") {
  const Grid g{2, 1.0, 2};
  const DensityField p = box_density(g, 0.0, 2.0);
  const auto path = std::filesystem::temp_directory_path() / "dlab_density.csv";
  write_density_csv(p, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "x_0,x_1,mass");
  std::getline(in, line);
  CHECK(line == "-0.5,-0.5,0.25");
  std::filesystem::remove(path);
}
