#pragma once

// Study runners behind the command-line tool: configuration parsing, result
// files, run manifests and plotting scripts.

#include "dlab/toy_model.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dlab {

inline constexpr const char* kToolName = "deep-limit-lab";
inline constexpr const char* kToolVersion = "0.1.0";

/// Bad or missing configuration; maps to the usage exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sectioned key = value file. Keys are addressed as "section.key". Numbers
/// accept a/b fractions; lists are comma separated.
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> integers(const std::string& key, const std::vector<int>& fallback) const;

  /// Throws ConfigError naming the first key outside `allowed`.
  void require_known(const std::set<std::string>& allowed) const;
  const std::string& source() const { return source_; }

 private:
  std::map<std::string, std::string> values_;
  std::string source_;
};

struct StudyOptions {
  std::filesystem::path out_dir;
  std::optional<int> seeds;
  int jobs = 1;
};

struct StudyResult {
  std::string subcommand;
  std::vector<std::string> outputs;  // file names relative to the output directory
  nlohmann::json summary = nlohmann::json::object();
};

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Writes to a temporary sibling, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

StudyResult run_trajectory_study(const Config& cfg, const StudyOptions& opts);
StudyResult run_sde_couple(const Config& cfg, const StudyOptions& opts);
StudyResult run_fp_study(const Config& cfg, const StudyOptions& opts);
StudyResult run_annuli_train(const Config& cfg, const StudyOptions& opts);
/// Aggregates every manifest in the output directory.
StudyResult run_report(const StudyOptions& opts);

/// `<subcommand>.manifest.json`; timestamps are the only nondeterministic fields.
void write_manifest(const StudyResult& result, const StudyOptions& opts, const Config* cfg,
                    const std::string& started, const std::string& finished);

/// Toy-model constants from the [toy] section.
ToyModelSpec toy_spec_from(const Config& cfg);

}  // namespace dlab
