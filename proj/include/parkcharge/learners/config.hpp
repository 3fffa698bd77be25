#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace parkcharge::learners {

enum class Algorithm {
  decision_tree,
  random_forest,
  gradient_boost,
  adaboost,
  logistic,
  gaussian_nb,
  multinomial_nb,
  linear_regression,
};

enum class Task { classification, ordinal, regression };

std::string to_string(Algorithm a);
std::string to_string(Task t);
/// Accepts the enum names plus the short forms dt, rf, xgb/gb, ab, lr, gnb, mnb, ln/ols.
Algorithm parse_algorithm(std::string_view text);
Task parse_task(std::string_view text);

/// Hyperparameter keys each algorithm accepts.
const std::vector<std::string>& allowed_keys(Algorithm a);

/// Grid keys kept for the RBF support vector machine, which is not built.
/// Config files may carry them; they are ignored.
const std::vector<std::string>& reserved_svm_keys();

bool is_probabilistic(Algorithm a);
bool supports_regression(Algorithm a);

struct LearnerConfig {
  Algorithm algorithm = Algorithm::decision_tree;
  Task task = Task::classification;
  std::map<std::string, std::string> hyperparams;
  std::uint64_t seed = 0;

  /// Throws UsageError naming every key the algorithm does not accept.
  void validate() const;

  std::string get(const std::string& key, const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  /// "none", "inf" or 0 mean unlimited and come back as 0.
  int max_depth(int fallback = 0) const;

  /// "random_forest{max_depth=3,n_trees=50}".
  std::string describe() const;

  friend bool operator==(const LearnerConfig&, const LearnerConfig&) = default;
};

}  // namespace parkcharge::learners
