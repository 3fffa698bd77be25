#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parkcharge/harness.hpp"
#include "parkcharge/learners/config.hpp"
#include "parkcharge/scheduler.hpp"

namespace parkcharge {

/// Key-value run configuration. File syntax: one `key = value` per line,
/// `#` starts a comment. Lists are comma separated except `features`, which
/// separates specs with `;`. Per-algorithm grids use `grid.<algorithm>.<key>`,
/// single-model hyperparameters `param.<key>`.
class RunConfig {
public:
  static RunConfig load(const std::filesystem::path& path);
  static RunConfig parse(std::string_view text, const std::string& source = "config");

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::optional<std::string> get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  /// Throws UsageError naming the missing key.
  std::string require(const std::string& key) const;
  const std::map<std::string, std::string>& values() const { return values_; }

  /// One message per violated key; empty when valid.
  std::vector<std::string> problems() const;
  /// Throws UsageError listing every problem.
  void validate() const;

  std::uint64_t seed() const;
  int jobs() const;
  std::filesystem::path out_dir() const;

  harness::ExperimentPlan experiment_plan() const;
  learners::LearnerConfig learner_config() const;
  scheduler::ChargerParams charger_params() const;

private:
  std::map<std::string, std::string> values_;
};

/// Environment variable that overrides a config-file `out` (a --out flag still wins).
inline constexpr const char* kOutEnv = "PARKCHARGE_OUT";

std::vector<std::string> split_list(std::string_view text, char sep = ',');

}  // namespace parkcharge
