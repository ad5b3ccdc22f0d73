// deep-limit-lab: runs the trajectory, SDE, Fokker-Planck and classification
// studies and aggregates their manifests.
//
// Exit codes: 0 success, 1 study failure, 2 usage or configuration error.

#include "dlab/experiments.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <ctime>
#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStudy = 1;
constexpr int kExitUsage = 2;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical studies of deep residual networks and their continuous-depth limits", dlab::kToolName};
  app.set_version_flag("--version", dlab::kToolVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int seeds = 0;
  int jobs = 1;

  const auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config_path, "study configuration (INI)");
    if (needs_config) c->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seeds", seeds, "number of Monte Carlo seeds (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  };
  auto* trajectory = app.add_subcommand("trajectory-study", "Euler scheme against the continuous flow");
  auto* sde = app.add_subcommand("sde-couple", "coupled SGD diffusions for the toy model");
  auto* fp = app.add_subcommand("fp-study", "Fokker-Planck densities, relaxation and tails");
  auto* annuli = app.add_subcommand("annuli-train", "depth sweep for the star-shaped classification task");
  auto* report = app.add_subcommand("report", "aggregate manifests in the output directory");
  for (auto* sub : {trajectory, sde, fp, annuli}) add_common(sub, true);
  add_common(report, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  dlab::StudyOptions opts;
  opts.out_dir = out_dir;
  if (seeds > 0) opts.seeds = seeds;
  opts.jobs = jobs;

  std::optional<dlab::Config> cfg;
  try {
    if (!config_path.empty()) cfg = dlab::Config::load(config_path);
  } catch (const dlab::ConfigError& e) {
    std::cerr << dlab::kToolName << ": " << e.what() << '\n';
    return kExitUsage;
  }

  const std::string started = utc_now();
  try {
    dlab::StudyResult result;
    if (*trajectory) {
      result = dlab::run_trajectory_study(*cfg, opts);
    } else if (*sde) {
      result = dlab::run_sde_couple(*cfg, opts);
    } else if (*fp) {
      result = dlab::run_fp_study(*cfg, opts);
    } else if (*annuli) {
      result = dlab::run_annuli_train(*cfg, opts);
    } else {
      result = dlab::run_report(opts);
    }
    dlab::write_manifest(result, opts, cfg ? &*cfg : nullptr, started, utc_now());
    std::cout << result.summary.dump(2) << '\n';
  } catch (const dlab::ConfigError& e) {
    std::cerr << dlab::kToolName << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << dlab::kToolName << ": study failed: " << e.what() << '\n';
    return kExitStudy;
  }
  return kExitOk;
}
