#pragma once

// Finite-volume solver for d_t p = div(grad p + p grad V) on [-L, L]^m, m in
// {1, 2}, with no-flux boundaries. Fluxes use exponential fitting so the
// discrete Gibbs state exp(-V_i) is an exact steady state; time stepping is
// implicit Euler, which keeps cell masses nonnegative for any dt.

#include "dlab/field.hpp"
#include "dlab/fit.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dlab {

struct Grid {
  int dim = 1;
  double half_width = 8.0;
  int cells_per_axis = 1024;

  void validate() const;
  double delta() const { return 2.0 * half_width / cells_per_axis; }
  Index cell_count() const;
  double center(int i) const { return -half_width + (i + 0.5) * delta(); }
  /// Cell centre of flat index k (axis 0 varies fastest).
  VectorXd point(Index k) const;
};

struct PotentialField {
  Grid grid;
  VectorXd values;
  std::string provenance;  // "analytic" or "risk-derived ..."

  static PotentialField from_function(const Grid& grid, const std::function<double(const VectorXd&)>& v,
                                      std::string provenance);
};

struct DensityField {
  Grid grid;
  VectorXd masses;
  double time = 0.0;

  double total() const;
  /// Throws unless masses are finite, nonnegative and sum to one within tol.
  void validate(double tol = 1e-12) const;
  static DensityField from_function(const Grid& grid, const std::function<double(const VectorXd&)>& density);
};

/// Normalized cell masses proportional to exp(-V), shifted by min V.
DensityField stationary_density(const PotentialField& v);

class FokkerPlanckSolver {
 public:
  FokkerPlanckSolver(const PotentialField& v, double dt);

  void step(VectorXd& masses) const;
  double dt() const { return dt_; }
  const PotentialField& potential() const { return v_; }
  /// Generator A of dM/dt = A M; columns sum to zero.
  const Eigen::SparseMatrix<double>& generator() const { return gen_; }

 private:
  PotentialField v_;
  double dt_;
  Eigen::SparseMatrix<double> gen_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

struct FpResult {
  DensityField density;
  double boundary_mass = 0.0;  // max over steps of the mass in the two outermost layers
  bool boundary_warning = false;
};

inline constexpr double kBoundaryMassLimit = 1e-8;

using FpObserver = std::function<void(const DensityField&)>;

/// Evolves p0 to time p0.time + T in steps of dt (dt must divide T); the
/// observer, when given, sees every state including the initial one.
FpResult fp_solve(const FokkerPlanckSolver& solver, const DensityField& p0, double T, const FpObserver& observe = {});
FpResult fp_solve(const PotentialField& v, const DensityField& p0, double T, double dt);

/// sum_i pi_i (M_i / pi_i - 1)^2, the squared L2(pi) distance of e^V p from 1.
double gibbs_chi2(const DensityField& p, const DensityField& gibbs);

struct RelaxationFit {
  bool converged = false;         // distance negligible throughout; no rate
  std::optional<double> rate;     // decay rate of the squared distance
  double r2 = 0.0;
  std::vector<std::pair<double, double>> samples;  // (t, squared distance)
};

/// Least-squares fit of log gibbs_chi2 against t over [T/2, T].
/// Throws FitError if the fit has R^2 < 0.95.
RelaxationFit relaxation_rate(const FokkerPlanckSolver& solver, const DensityField& p0, double T);

/// Cells whose centre satisfies inner <= |x| < outer.
double tail_mass(const DensityField& p, double inner, double outer);
/// sum over the annulus of M_i w_i.
double tail_mass_weighted(const DensityField& p, double inner, double outer, const VectorXd& weight);
/// Annulus part of the integral of p^2 e^V.
double tail_l2_gibbs(const DensityField& p, const PotentialField& v, double inner, double outer);

struct TailProfile {
  std::vector<double> distance;  // from the support radius to the annulus
  std::vector<double> mass;
  SlopeFit fit;                  // log mass against distance^2 (slope, intercept, r2)
};

/// Annuli given as (inner, outer) pairs outside the initial support radius.
TailProfile tail_profile(const DensityField& p, double support_radius,
                         const std::vector<std::pair<double, double>>& annuli);

struct GapRow {
  int n_steps = 0;
  double gap = 0.0;            // integral of w |p - p^(N)|
  double gap_penalty = 0.0;    // same with weight exp(gamma H / 4)
  double gap_ball = 0.0;       // restricted to |x| <= ball_radius
  double bound = 0.0;          // integral of w (p + p^(N))
};

struct GapTable {
  std::vector<GapRow> rows;
  std::optional<SlopeFit> slope;
  std::optional<SlopeFit> slope_penalty;
};

struct GapStudySpec {
  std::vector<int> n_list;
  double T = 1.0;
  double dt = 1e-3;
  double ball_radius = 1.0;
  int jobs = 1;
};

/// `potential(n)` builds V_N (n = 0 continuous), `penalty_weight` gives
/// exp(gamma H / 4) per cell. Both densities start from p0.
GapTable density_gap_study(const std::function<PotentialField(int)>& potential, const VectorXd& penalty_weight,
                           const DensityField& p0, const GapStudySpec& spec);

/// Columns x_0[,x_1],mass.
void write_density_csv(const DensityField& p, const std::filesystem::path& path);

}  // namespace dlab
