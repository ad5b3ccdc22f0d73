#include "dlab/experiments.hpp"

#include "dlab/classifier.hpp"
#include "dlab/datasets.hpp"
#include "dlab/fokker_planck.hpp"
#include "dlab/errors.hpp"
#include "dlab/parallel.hpp"
#include "dlab/sde.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dlab {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(s);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  return out;
}

double parse_number(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    const double q = parse_number(key, s.substr(0, slash)) / parse_number(key, s.substr(slash + 1));
    if (!std::isfinite(q)) throw ConfigError("config key '" + key + "': '" + raw + "' is not a finite number");
    return q;
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ConfigError("config key '" + key + "': cannot parse '" + raw + "' as a number");
  }
  return v;
}

}  // namespace

Config Config::parse(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Config cfg;
  cfg.source_ = text;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      cfg.values_[section] = trim(body.data());
      continue;
    }
    for (const auto& [key, leaf] : body) cfg.values_[section + "." + key] = trim(leaf.data());
  }
  return cfg;
}

Config Config::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::number(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_number(key, it->second);
}

long Config::integer(const std::string& key, long fallback) const {
  const double v = number(key, static_cast<double>(fallback));
  if (v != std::floor(v)) throw ConfigError("config key '" + key + "' must be an integer");
  return static_cast<long>(v);
}

std::vector<double> Config::numbers(const std::string& key, const std::vector<double>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto& cell : split(it->second, ',')) out.push_back(parse_number(key, cell));
  if (out.empty()) throw ConfigError("config key '" + key + "' is an empty list");
  return out;
}

std::vector<int> Config::integers(const std::string& key, const std::vector<int>& fallback) const {
  std::vector<double> fb(fallback.begin(), fallback.end());
  std::vector<int> out;
  for (double v : numbers(key, fb)) {
    if (v != std::floor(v)) throw ConfigError("config key '" + key + "' must hold integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void Config::require_known(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (!allowed.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
}

// ---------------------------------------------------------------- files

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

std::string fmt(double v) { return format_double(v); }

// Collects output files; every write goes through here.
class Outputs {
 public:
  Outputs(const StudyOptions& opts, StudyResult& result) : opts_(opts), result_(result) {
    fs::create_directories(opts.out_dir);
  }
  void write(const std::string& name, const std::string& content) {
    write_file_atomic(opts_.out_dir / name, content);
    result_.outputs.push_back(name);
  }

 private:
  const StudyOptions& opts_;
  StudyResult& result_;
};

json slope_json(const std::optional<SlopeFit>& fit) {
  if (!fit) return "exact";
  return {{"slope", fit->slope}, {"intercept", fit->intercept}, {"r2", fit->r2}};
}

std::vector<int> powers_of_two(int lo, int hi) {
  std::vector<int> out;
  for (int n = lo; n <= hi; n *= 2) out.push_back(n);
  return out;
}

void require_positive(const std::vector<int>& ns, const std::string& key) {
  if (ns.empty()) throw ConfigError("config key '" + key + "' is empty");
  for (int n : ns) {
    if (n < 1) throw ConfigError("config key '" + key + "' must hold positive integers");
  }
}

std::string gnuplot_header(const std::string& title) {
  return "# gnuplot script generated by " + std::string(kToolName) + "\nset datafile separator ','\nset key autotitle columnhead\nset title '" +
         title + "'\nset grid\n";
}

}  // namespace

// ---------------------------------------------------------------- trajectory

namespace {

WeightVector trajectory_weights(const Config& cfg, const FieldShape& shape) {
  const std::string spec = cfg.text("trajectory.weights", "random:0.5");
  const auto parts = split(spec, ':');
  if (parts[0] == "zero") return WeightVector(shape);
  if (parts[0] == "linear") {
    if (shape.dim != 1 || shape.hidden != 1) throw ConfigError("linear weights need dim = hidden = 1");
    const double a = parts.size() > 1 ? parse_number("trajectory.weights", parts[1]) : 1.0;
    return WeightVector::from_parts(MatrixXd::Constant(1, 1, a), MatrixXd::Constant(1, 1, 1.0), VectorXd::Zero(1),
                                    VectorXd::Zero(1));
  }
  if (parts[0] == "random") {
    const double scale = parts.size() > 1 ? parse_number("trajectory.weights", parts[1]) : 0.5;
    RandomStream rng(static_cast<std::uint64_t>(cfg.integer("trajectory.seed", 1)), 0);
    VectorXd flat(shape.param_count());
    for (auto& e : flat) e = scale * rng.normal();
    return WeightVector(shape, flat);
  }
  const std::vector<double> flat = cfg.numbers("trajectory.weights", {});
  if (static_cast<Index>(flat.size()) != shape.param_count()) {
    throw ConfigError("trajectory.weights: expected " + std::to_string(shape.param_count()) + " values");
  }
  return WeightVector(shape, Eigen::Map<const VectorXd>(flat.data(), static_cast<Index>(flat.size())));
}

}  // namespace

StudyResult run_trajectory_study(const Config& cfg, const StudyOptions& opts) {
  cfg.require_known({"trajectory.activation", "trajectory.dim", "trajectory.hidden", "trajectory.weights",
                     "trajectory.x0", "trajectory.n_list", "trajectory.seed"});
  Activation act;
  try {
    act = parse_activation(cfg.text("trajectory.activation", "tanh"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const FieldShape shape{cfg.integer("trajectory.dim", 1), cfg.integer("trajectory.hidden", 1)};
  if (shape.dim < 1 || shape.hidden < 1) throw ConfigError("trajectory: dim and hidden must be positive");
  const WeightVector theta = trajectory_weights(cfg, shape);
  const std::vector<double> x0v = cfg.numbers("trajectory.x0", std::vector<double>(shape.dim, 1.0));
  if (static_cast<Index>(x0v.size()) != shape.dim) throw ConfigError("trajectory.x0 must have dim entries");
  const VectorXd x0 = Eigen::Map<const VectorXd>(x0v.data(), shape.dim);
  const std::vector<int> ns = cfg.integers("trajectory.n_list", powers_of_two(4, 1024));
  require_positive(ns, "trajectory.n_list");

  const DiscrepancyTable state = discrepancy_study(act, theta, x0, ns);
  const DiscrepancyTable grad = grad_discrepancy_study(act, theta, x0, ns);

  StudyResult res;
  res.subcommand = "trajectory-study";
  Outputs out(opts, res);
  std::string csv = "N,state_discrepancy,grad_discrepancy\n";
  for (std::size_t i = 0; i < ns.size(); ++i) {
    csv += std::to_string(ns[i]) + "," + fmt(state.rows[i].value) + "," + fmt(grad.rows[i].value) + "\n";
  }
  out.write("trajectory.csv", csv);
  out.write("trajectory.gp", gnuplot_header("Euler scheme against the continuous flow") +
                                 "set logscale xy\nset xlabel 'N'\nplot 'trajectory.csv' using 1:2 with linespoints, "
                                 "'' using 1:3 with linespoints\n");
  res.summary = {{"state_slope", slope_json(state.slope)}, {"grad_slope", slope_json(grad.slope)},
                 {"activation", activation_name(act)}, {"param_count", shape.param_count()}};
  return res;
}

// ---------------------------------------------------------------- toy model

ToyModelSpec toy_spec_from(const Config& cfg) {
  ToyModelSpec s;
  s.n_samples = static_cast<std::size_t>(cfg.integer("toy.n_samples", static_cast<long>(s.n_samples)));
  s.x_lo = cfg.number("toy.x_lo", s.x_lo);
  s.x_hi = cfg.number("toy.x_hi", s.x_hi);
  s.target_rate = cfg.number("toy.target_rate", s.target_rate);
  s.lambda_cap = cfg.number("toy.lambda_cap", s.lambda_cap);
  s.gamma = cfg.number("toy.gamma", s.gamma);
  s.lam = cfg.number("toy.lam", s.lam);
  s.rho0 = cfg.number("toy.rho0", s.rho0);
  s.table_nodes = static_cast<std::size_t>(cfg.integer("toy.table_nodes", static_cast<long>(s.table_nodes)));
  s.oracle_steps = static_cast<int>(cfg.integer("toy.oracle_steps", s.oracle_steps));
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

namespace {

const std::set<std::string> kToyKeys = {"toy.n_samples", "toy.x_lo", "toy.x_hi", "toy.target_rate", "toy.lambda_cap",
                                        "toy.gamma", "toy.lam", "toy.rho0", "toy.table_nodes", "toy.oracle_steps"};

std::set<std::string> with_toy(std::set<std::string> keys) {
  keys.insert(kToyKeys.begin(), kToyKeys.end());
  return keys;
}

std::vector<PolynomialTest> parse_tests(const std::string& spec) {
  std::vector<PolynomialTest> tests;
  for (const auto& item : split(spec, ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("sde.tests: expected name:c0,c1,...");
    PolynomialTest t;
    t.name = trim(item.substr(0, colon));
    for (const auto& c : split(item.substr(colon + 1), ',')) t.coefficients.push_back(parse_number("sde.tests", c));
    tests.push_back(std::move(t));
  }
  return tests;
}

InitDistribution parse_init(const Config& cfg, const std::string& prefix) {
  InitDistribution init;
  const std::string kind = cfg.text(prefix + ".init_kind", "ball");
  if (kind == "ball") {
    init.kind = InitKind::uniform_ball;
  } else if (kind == "box") {
    init.kind = InitKind::uniform_box;
  } else {
    throw ConfigError(prefix + ".init_kind must be ball or box");
  }
  init.radius = cfg.number(prefix + ".init_radius", 1.0);
  if (!(init.radius >= 0.0)) throw ConfigError(prefix + ".init_radius must be nonnegative");
  return init;
}

}  // namespace

// ---------------------------------------------------------------- sde

StudyResult run_sde_couple(const Config& cfg, const StudyOptions& opts) {
  cfg.require_known(with_toy({"sde.n_list", "sde.seeds", "sde.T", "sde.h", "sde.sigma", "sde.seed", "sde.init_kind",
                              "sde.init_radius", "sde.tests"}));
  const ToyModelSpec toy = toy_spec_from(cfg);
  McStudySpec spec;
  spec.n_list = cfg.integers("sde.n_list", powers_of_two(2, 128));
  require_positive(spec.n_list, "sde.n_list");
  spec.n_seeds = static_cast<std::size_t>(opts.seeds ? *opts.seeds : cfg.integer("sde.seeds", 200));
  if (spec.n_seeds < 2) throw ConfigError("sde: need at least two seeds");
  spec.T = cfg.number("sde.T", 1.0);
  spec.h = cfg.number("sde.h", 1.0 / 2048.0);
  try {
    sde_step_count(spec.T, spec.h);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  spec.noise = NoiseModel::isotropic(1, cfg.number("sde.sigma", std::sqrt(2.0)),
                                     static_cast<std::uint64_t>(cfg.integer("sde.seed", 1)));
  spec.init = parse_init(cfg, "sde");
  spec.tests = parse_tests(cfg.text("sde.tests", "one:1;identity:0,1;square:0,0,1"));
  spec.jobs = opts.jobs;

  const ProcessFactory factory = toy_process_factory(toy);
  const McTable table = mc_statistics(factory, spec);

  StudyResult res;
  res.subcommand = "sde-couple";
  Outputs out(opts, res);
  write_mc_csv(table, spec.tests, opts.out_dir / "sde_statistics.csv.tmp");
  {
    std::ifstream in(opts.out_dir / "sde_statistics.csv.tmp");
    std::ostringstream buf;
    buf << in.rdbuf();
    fs::remove(opts.out_dir / "sde_statistics.csv.tmp");
    out.write("sde_statistics.csv", buf.str());
  }

  // One coupled example path per N for plotting.
  std::string paths = "t,continuous";
  for (int n : spec.n_list) paths += ",N" + std::to_string(n);
  paths += "\n";
  const Drift cont = factory.drift(0);
  std::vector<SDEPath> disc;
  CoupledRun first;
  for (int n : spec.n_list) {
    first = coupled_run(cont, factory.drift(n), spec.noise, spec.init, spec.T, spec.h, 0);
    disc.push_back(first.discrete);
  }
  for (std::size_t k = 0; k < first.continuous.times.size(); ++k) {
    paths += fmt(first.continuous.times[k]) + "," + fmt(first.continuous.theta[k][0]);
    for (const auto& p : disc) paths += "," + fmt(p.theta[k][0]);
    paths += "\n";
  }
  out.write("sde_paths.csv", paths);
  out.write("sde.gp", gnuplot_header("Coupled continuous and N-layer SGD diffusions") +
                          "set xlabel 't'\nset ylabel 'theta'\nplot for [c=2:" + std::to_string(spec.n_list.size() + 2) +
                          "] 'sde_paths.csv' using 1:c with lines\n");

  bool monotone = true;
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    monotone = monotone && table.rows[i].sup_sq.mean <= table.rows[i - 1].sup_sq.mean + 2.0 * table.rows[i - 1].sup_sq.std_error;
  }
  res.summary = {{"seeds", spec.n_seeds},
                 {"continuous_risk", {{"mean", table.continuous_risk.mean}, {"stderr", table.continuous_risk.std_error}}},
                 {"mean_gap_slope", slope_json(table.mean_gap_slope)},
                 {"risk_gap_slope", slope_json(table.risk_gap_slope)},
                 {"sup_sq_slope", slope_json(table.sup_sq_slope)},
                 {"sup_sq_nonincreasing_within_2se", monotone}};
  return res;
}

// ---------------------------------------------------------------- fokker-planck

namespace {

struct InitialDensity {
  DensityField density;
  std::optional<double> support_radius;
};

InitialDensity parse_p0(const Config& cfg, const Grid& grid) {
  const auto parts = split(cfg.text("fp.p0", "ball:1"), ':');
  const auto arg = [&](std::size_t i, double fallback) {
    return parts.size() > i ? parse_number("fp.p0", parts[i]) : fallback;
  };
  if (parts[0] == "ball") {
    const double r = arg(1, 1.0);
    return {DensityField::from_function(grid, [&](const VectorXd& x) { return x.norm() < r ? 1.0 : 0.0; }), r};
  }
  if (parts[0] == "box") {
    const double c = arg(1, 0.0), h = arg(2, 0.5);
    return {DensityField::from_function(grid, [&](const VectorXd& x) {
              return (x.array() - c).abs().maxCoeff() < h ? 1.0 : 0.0;
            }),
            std::abs(c) + h * std::sqrt(static_cast<double>(grid.dim))};
  }
  if (parts[0] == "gauss") {
    const double mean = arg(1, 0.0), sd = arg(2, 0.5);
    return {DensityField::from_function(
                grid, [&](const VectorXd& x) { return std::exp(-(x.array() - mean).square().sum() / (2 * sd * sd)); }),
            std::nullopt};
  }
  throw ConfigError("fp.p0 must be ball:<r>, box:<center>:<half> or gauss:<mean>:<sd>");
}

}  // namespace

StudyResult run_fp_study(const Config& cfg, const StudyOptions& opts) {
  cfg.require_known(with_toy({"fp.potential", "fp.dim", "fp.half_width", "fp.cells", "fp.dt", "fp.T", "fp.p0",
                              "fp.n_list", "fp.ball_radius", "fp.relaxation_T", "fp.tail_annuli"}));
  Grid grid{static_cast<int>(cfg.integer("fp.dim", 1)), cfg.number("fp.half_width", 8.0),
            static_cast<int>(cfg.integer("fp.cells", 1024))};
  try {
    grid.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const double dt = cfg.number("fp.dt", 1e-3);
  const double T = cfg.number("fp.T", 1.0);
  if (!(dt > 0.0) || !(T > 0.0)) throw ConfigError("fp.dt and fp.T must be positive");
  const std::string kind = cfg.text("fp.potential", "toy");
  const InitialDensity p0 = parse_p0(cfg, grid);

  StudyResult res;
  res.subcommand = "fp-study";
  std::function<PotentialField(int)> potential;
  VectorXd penalty_weight;
  if (kind == "ou") {
    potential = [grid](int) {
      return PotentialField::from_function(grid, [](const VectorXd& x) { return 0.5 * x.squaredNorm(); }, "analytic");
    };
  } else if (kind == "toy") {
    if (grid.dim != 1) throw ConfigError("fp: the toy potential is one-dimensional");
    const ToyModelSpec toy = toy_spec_from(cfg);
    potential = [grid, toy](int n) {
      const ScalarPotential v(toy, n ? FlowScheme::euler(n) : FlowScheme::continuous());
      return PotentialField::from_function(grid, [&](const VectorXd& x) { return v.value(x[0]); },
                                           n ? "risk-derived N=" + std::to_string(n) : "risk-derived continuous");
    };
    penalty_weight.resize(grid.cell_count());
    for (Index k = 0; k < penalty_weight.size(); ++k) {
      const double h = regularizer(grid.point(k), {toy.gamma, toy.lam, toy.rho0}).value;
      penalty_weight[k] = std::exp(toy.gamma * h / 4.0);
    }
  } else {
    throw ConfigError("fp.potential must be ou or toy");
  }

  Outputs out(opts, res);
  const PotentialField v = potential(0);
  const FokkerPlanckSolver solver(v, dt);
  double worst_drift = 0.0;
  double prev_total = p0.density.total();
  const FpResult final = fp_solve(solver, p0.density, T, [&](const DensityField& p) {
    const double total = p.total();
    worst_drift = std::max(worst_drift, std::abs(total - prev_total));
    prev_total = total;
  });
  {
    const fs::path tmp = opts.out_dir / "fp_density.csv.tmp";
    write_density_csv(final.density, tmp);
    std::ifstream in(tmp);
    std::ostringstream buf;
    buf << in.rdbuf();
    fs::remove(tmp);
    out.write("fp_density.csv", buf.str());
  }
  std::vector<double> terms(static_cast<std::size_t>(v.values.size()));
  for (Index k = 0; k < v.values.size(); ++k) terms[static_cast<std::size_t>(k)] = final.density.masses[k] * v.values[k];
  res.summary["potential"] = v.provenance;
  res.summary["expected_potential_at_T"] = pairwise_sum(terms);
  res.summary["max_mass_drift_per_step"] = worst_drift;
  res.summary["boundary_mass"] = final.boundary_mass;
  res.summary["boundary_warning"] = final.boundary_warning;

  const double relax_T = cfg.number("fp.relaxation_T", 4.0);
  try {
    const RelaxationFit fit = relaxation_rate(solver, p0.density, relax_T);
    std::string csv = "t,chi2\n";
    for (const auto& [t, c] : fit.samples) csv += fmt(t) + "," + fmt(c) + "\n";
    out.write("fp_relaxation.csv", csv);
    if (fit.converged) {
      res.summary["relaxation"] = "converged";
    } else {
      res.summary["relaxation"] = {{"rate", *fit.rate}, {"r2", fit.r2}};
    }
  } catch (const FitError& e) {
    res.summary["relaxation"] = std::string("rejected: ") + e.what();
  }

  if (cfg.has("fp.tail_annuli")) {
    if (!p0.support_radius) throw ConfigError("fp.tail_annuli needs a compactly supported fp.p0");
    std::vector<std::pair<double, double>> annuli;
    for (const auto& item : split(cfg.text("fp.tail_annuli", ""), ',')) {
      const auto ab = split(item, ':');
      if (ab.size() != 2) throw ConfigError("fp.tail_annuli: expected inner:outer pairs");
      annuli.emplace_back(parse_number("fp.tail_annuli", ab[0]), parse_number("fp.tail_annuli", ab[1]));
    }
    const TailProfile prof = tail_profile(final.density, *p0.support_radius, annuli);
    std::string csv = "distance,distance_sq,mass\n";
    for (std::size_t i = 0; i < prof.mass.size(); ++i) {
      csv += fmt(prof.distance[i]) + "," + fmt(prof.distance[i] * prof.distance[i]) + "," + fmt(prof.mass[i]) + "\n";
    }
    out.write("fp_tails.csv", csv);
    res.summary["tail_fit"] = {{"slope", prof.fit.slope}, {"intercept", prof.fit.intercept}, {"r2", prof.fit.r2}};
  }

  std::string plot = gnuplot_header("Density at time T") + "set xlabel 'theta'\nplot 'fp_density.csv' using 1:2 with lines\n";
  if (kind == "toy") {
    GapStudySpec gs;
    gs.n_list = cfg.integers("fp.n_list", powers_of_two(2, 64));
    require_positive(gs.n_list, "fp.n_list");
    gs.T = T;
    gs.dt = dt;
    gs.ball_radius = cfg.number("fp.ball_radius", 1.0);
    gs.jobs = opts.jobs;
    const GapTable gap = density_gap_study(potential, penalty_weight, p0.density, gs);
    std::string csv = "N,gap,gap_penalty,gap_ball,bound\n";
    for (const auto& r : gap.rows) {
      csv += std::to_string(r.n_steps) + "," + fmt(r.gap) + "," + fmt(r.gap_penalty) + "," + fmt(r.gap_ball) + "," +
             fmt(r.bound) + "\n";
    }
    out.write("fp_gap.csv", csv);
    res.summary["gap_slope"] = slope_json(gap.slope);
    res.summary["gap_penalty_slope"] = slope_json(gap.slope_penalty);
    plot += "pause -1\nset logscale xy\nset xlabel 'N'\nplot 'fp_gap.csv' using 1:2 with linespoints, '' using 1:3 with linespoints\n";
  }
  out.write("fp.gp", plot);
  return res;
}

// ---------------------------------------------------------------- annuli

StudyResult run_annuli_train(const Config& cfg, const StudyOptions& opts) {
  cfg.require_known({"annuli.r1", "annuli.r2", "annuli.r3", "annuli.n_samples", "annuli.augment_dims",
                     "annuli.data_seed", "annuli.hidden", "annuli.activation", "annuli.learning_rate",
                     "annuli.momentum", "annuli.iterations", "annuli.batch", "annuli.init_scale", "annuli.gamma",
                     "annuli.lam", "annuli.rho0", "annuli.lambda_cap", "annuli.seed", "annuli.n_list",
                     "annuli.folds"});
  StarlikeSpec data_spec;
  data_spec.r1 = cfg.number("annuli.r1", data_spec.r1);
  data_spec.r2 = cfg.number("annuli.r2", data_spec.r2);
  data_spec.r3 = cfg.number("annuli.r3", data_spec.r3);
  data_spec.n_samples = static_cast<std::size_t>(cfg.integer("annuli.n_samples", 2000));
  data_spec.augment_dims = static_cast<int>(cfg.integer("annuli.augment_dims", 0));
  data_spec.seed = static_cast<std::uint64_t>(cfg.integer("annuli.data_seed", 1));
  ClassifierSpec spec;
  spec.hidden = static_cast<int>(cfg.integer("annuli.hidden", spec.hidden));
  spec.learning_rate = cfg.number("annuli.learning_rate", spec.learning_rate);
  spec.momentum = cfg.number("annuli.momentum", spec.momentum);
  spec.iterations = static_cast<int>(cfg.integer("annuli.iterations", 1000));
  spec.batch = static_cast<int>(cfg.integer("annuli.batch", spec.batch));
  spec.init_scale = cfg.number("annuli.init_scale", spec.init_scale);
  spec.gamma = cfg.number("annuli.gamma", spec.gamma);
  spec.lam = cfg.number("annuli.lam", spec.lam);
  spec.rho0 = cfg.number("annuli.rho0", spec.rho0);
  spec.lambda_cap = cfg.number("annuli.lambda_cap", spec.lambda_cap);
  spec.seed = static_cast<std::uint64_t>(cfg.integer("annuli.seed", 1));
  spec.jobs = opts.jobs;
  const std::vector<int> ns = cfg.integers("annuli.n_list", {1, 2, 5, 20});
  require_positive(ns, "annuli.n_list");
  const int folds = static_cast<int>(cfg.integer("annuli.folds", 5));
  try {
    spec.activation = parse_activation(cfg.text("annuli.activation", "relu"));
    data_spec.validate();
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (folds < 2) throw ConfigError("annuli.folds must be at least 2");

  const LabeledDataset data = gen_starlike(data_spec);
  const std::vector<CvRow> rows = cross_validate(data, ns, folds, spec);

  StudyResult res;
  res.subcommand = "annuli-train";
  Outputs out(opts, res);
  {
    const fs::path tmp = opts.out_dir / "annuli_data.csv.tmp";
    write_dataset_csv(data, tmp);
    std::ifstream in(tmp);
    std::ostringstream buf;
    buf << in.rdbuf();
    fs::remove(tmp);
    out.write("annuli_data.csv", buf.str());
  }
  const json data_manifest = {{"file", "annuli_data.csv"},
                              {"generator", "starlike"},
                              {"r1", data_spec.r1},
                              {"r2", data_spec.r2},
                              {"r3", data_spec.r3},
                              {"n_samples", data_spec.n_samples},
                              {"augment_dims", data_spec.augment_dims},
                              {"seed", data_spec.seed},
                              {"sampling", "area-uniform per class region, rejection in the disk of radius 3 r3"}};
  out.write("annuli_data.json", data_manifest.dump(2) + "\n");

  std::string folds_csv = "N,fold,ok,cross_entropy,squared,accuracy,error\n";
  std::string cv_csv = "N,cross_entropy,cross_entropy_spread,squared,squared_spread,accuracy,accuracy_spread,failed_folds\n";
  json per_n = json::array();
  for (const auto& r : rows) {
    int failed = 0;
    for (const auto& f : r.folds) {
      failed += !f.ok;
      std::string err = f.error;
      std::replace(err.begin(), err.end(), ',', ';');
      folds_csv += std::to_string(r.n_steps) + "," + std::to_string(f.fold) + "," + (f.ok ? "1" : "0") + "," +
                   fmt(f.test.cross_entropy) + "," + fmt(f.test.squared) + "," + fmt(f.test.accuracy) + "," + err + "\n";
    }
    cv_csv += std::to_string(r.n_steps) + "," + fmt(r.mean.cross_entropy) + "," + fmt(r.spread.cross_entropy) + "," +
              fmt(r.mean.squared) + "," + fmt(r.spread.squared) + "," + fmt(r.mean.accuracy) + "," +
              fmt(r.spread.accuracy) + "," + std::to_string(failed) + "\n";
    per_n.push_back({{"N", r.n_steps},
                     {"cross_entropy", r.mean.cross_entropy},
                     {"cross_entropy_spread", r.spread.cross_entropy},
                     {"squared", r.mean.squared},
                     {"accuracy", r.mean.accuracy},
                     {"failed_folds", failed}});
  }
  out.write("annuli_folds.csv", folds_csv);
  out.write("annuli_cv.csv", cv_csv);
  out.write("annuli.gp", gnuplot_header("Cross-validated loss against depth") +
                             "set logscale x\nset xlabel 'N'\nset ylabel 'cross entropy'\n"
                             "plot 'annuli_cv.csv' using 1:2:3 with yerrorlines\n");
  res.summary = {{"augment_dims", data_spec.augment_dims}, {"folds", folds}, {"rows", per_n}};
  return res;
}

// ---------------------------------------------------------------- report

StudyResult run_report(const StudyOptions& opts) {
  StudyResult res;
  res.subcommand = "report";
  std::vector<fs::path> manifests;
  if (fs::is_directory(opts.out_dir)) {
    for (const auto& entry : fs::directory_iterator(opts.out_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.size() > 14 && name.ends_with(".manifest.json") && name != "report.manifest.json") {
        manifests.push_back(entry.path());
      }
    }
  }
  std::sort(manifests.begin(), manifests.end());
  std::string csv = "subcommand,key,value\n";
  json studies = json::array();
  std::string plot = gnuplot_header("Study outputs");
  for (const auto& path : manifests) {
    std::ifstream in(path);
    json m;
    try {
      m = json::parse(in);
    } catch (const json::exception& e) {
      throw std::runtime_error("unreadable manifest " + path.string() + ": " + e.what());
    }
    const std::string sub = m.value("subcommand", path.stem().stem().string());
    studies.push_back(sub);
    const json flat = m.value("summary", json::object()).flatten();
    for (const auto& [key, value] : flat.items()) {
      std::string text = value.is_string() ? value.get<std::string>() : value.dump();
      std::replace(text.begin(), text.end(), ',', ';');
      csv += sub + "," + key + "," + text + "\n";
    }
    for (const auto& file : m.value("outputs", json::array())) {
      const std::string name = file.value("file", "");
      if (name.ends_with(".gp")) plot += "load '" + name + "'\npause -1\n";
    }
  }
  Outputs out(opts, res);
  out.write("report_summary.csv", csv);
  out.write("report.gp", plot);
  res.summary = {{"studies", studies}};
  return res;
}

void write_manifest(const StudyResult& result, const StudyOptions& opts, const Config* cfg, const std::string& started,
                    const std::string& finished) {
  json outputs = json::array();
  for (const auto& name : result.outputs) {
    std::ifstream in(opts.out_dir / name, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    outputs.push_back({{"file", name}, {"fnv1a64", hex64(fnv1a64(buf.str()))}});
  }
  json m = {{"tool", kToolName},
            {"version", kToolVersion},
            {"subcommand", result.subcommand},
            {"config_hash", cfg ? json(hex64(fnv1a64(cfg->source()))) : json(nullptr)},
            {"jobs", opts.jobs},
            {"seeds_override", opts.seeds ? json(*opts.seeds) : json(nullptr)},
            {"outputs", outputs},
            {"summary", result.summary},
            {"started_at", started},
            {"finished_at", finished}};
  write_file_atomic(opts.out_dir / (result.subcommand + ".manifest.json"), m.dump(2) + "\n");
}

}  // namespace dlab
