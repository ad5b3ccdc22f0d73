#pragma once

// Euler-Maruyama simulation of d theta = -grad V(theta) dt + Sigma dW, and
// Monte Carlo comparison of the continuous-depth and N-layer processes driven
// by common initial weights and Brownian increments.

#include "dlab/field.hpp"
#include "dlab/fit.hpp"
#include "dlab/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <filesystem>
#include <vector>

namespace dlab {

struct NoiseModel {
  MatrixXd sigma;  // m x m; zero gives plain gradient descent
  std::uint64_t seed = 1;

  static NoiseModel isotropic(Index m, double scale = std::sqrt(2.0), std::uint64_t seed = 1);
  /// Throws unless sigma is square and either zero or of full rank.
  void validate() const;
  Index dim() const { return sigma.rows(); }
};

enum class InitKind { uniform_ball, uniform_box };

struct InitDistribution {
  InitKind kind = InitKind::uniform_ball;
  double radius = 1.0;  // box half-width for uniform_box
  VectorXd center;      // empty means the origin

  /// Every sample lies in the closed ball B(center, radius sqrt(m)) for the box,
  /// B(center, radius) for the ball.
  VectorXd sample(RandomStream& rng, Index m) const;
};

using Drift = std::function<void(const VectorXd& theta, VectorXd& out)>;

struct SDEPath {
  std::vector<double> times;
  std::vector<VectorXd> theta;
  std::vector<VectorXd> increments;  // xi_k, only when requested
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
};

/// Standard normal xi_k of step k for a path; a pure function of (seed, path, k).
VectorXd brownian_increment(std::uint64_t seed, std::uint64_t path_index, std::uint64_t step, Index m);

/// Initial weights of a path, drawn from a stream disjoint from the increments.
VectorXd initial_weights(const InitDistribution& init, std::uint64_t seed, std::uint64_t path_index, Index m);

/// Number of steps K with K h = T; throws if h does not divide T (relative 1e-9) or h > T.
std::size_t sde_step_count(double T, double h);

/// theta_{k+1} = theta_k - h drift(theta_k) + sqrt(h) Sigma xi_k.
/// Throws NonFiniteError carrying the step index on overflow.
SDEPath euler_maruyama(const Drift& drift, const NoiseModel& noise, const VectorXd& theta0, double T, double h,
                       std::uint64_t path_index = 0, bool keep_increments = false);

struct CoupledRun {
  SDEPath continuous;
  SDEPath discrete;
  double sup_dist = 0.0;  // max over grid times of |theta_t - theta^(N)_t|
};

CoupledRun coupled_run(const Drift& drift_continuous, const Drift& drift_discrete, const NoiseModel& noise,
                       const InitDistribution& init, double T, double h, std::uint64_t path_index = 0);

/// phi(theta) = sum_k coefficients[k] theta[component]^k.
struct PolynomialTest {
  std::string name;
  std::vector<double> coefficients;
  Index component = 0;

  double operator()(const VectorXd& theta) const;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct McRow {
  int n_steps = 0;
  Estimate mean_gap;   // |E[theta_T - theta^(N)_T]|
  Estimate risk_gap;   // |E[V(theta_T) - V_N(theta^(N)_T)]|
  Estimate sup_sq;     // E[sup_t |theta_t - theta^(N)_t|^2]
  std::vector<Estimate> weak;  // |E[phi(theta_T) - phi(theta^(N)_T)]| per test function
};

struct McTable {
  std::size_t seeds = 0;
  Estimate continuous_risk;  // E[V(theta_T)]
  std::vector<McRow> rows;
  std::optional<SlopeFit> mean_gap_slope;
  std::optional<SlopeFit> risk_gap_slope;
  std::optional<SlopeFit> sup_sq_slope;
};

/// Drift and objective of one process; n_steps == 0 selects the continuous one.
struct ProcessFactory {
  std::function<Drift(int n_steps)> drift;
  std::function<double(int n_steps, const VectorXd& theta)> objective;
};

struct McStudySpec {
  std::vector<int> n_list;
  std::size_t n_seeds = 200;
  double T = 1.0;
  double h = 1.0 / 2048.0;
  NoiseModel noise;
  InitDistribution init;
  std::vector<PolynomialTest> tests;
  int jobs = 1;
};

/// Seeds are independent work units; statistics are reduced in seed order.
McTable mc_statistics(const ProcessFactory& factory, const McStudySpec& spec);

/// Columns N, statistic, estimate, stderr.
void write_mc_csv(const McTable& table, const std::vector<PolynomialTest>& tests, const std::filesystem::path& path);

}  // namespace dlab
