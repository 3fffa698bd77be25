#include "parkcharge/learners/config.hpp"

#include <algorithm>

#include "parkcharge/common.hpp"

namespace parkcharge::learners {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::decision_tree: return "decision_tree";
    case Algorithm::random_forest: return "random_forest";
    case Algorithm::gradient_boost: return "gradient_boost";
    case Algorithm::adaboost: return "adaboost";
    case Algorithm::logistic: return "logistic";
    case Algorithm::gaussian_nb: return "gaussian_nb";
    case Algorithm::multinomial_nb: return "multinomial_nb";
    case Algorithm::linear_regression: return "linear_regression";
  }
  return "?";
}

std::string to_string(Task t) {
  switch (t) {
    case Task::classification: return "classification";
    case Task::ordinal: return "ordinal";
    case Task::regression: return "regression";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "decision_tree" || t == "dt") return Algorithm::decision_tree;
  if (t == "random_forest" || t == "rf") return Algorithm::random_forest;
  if (t == "gradient_boost" || t == "gb" || t == "xgb") return Algorithm::gradient_boost;
  if (t == "adaboost" || t == "ab") return Algorithm::adaboost;
  if (t == "logistic" || t == "lr") return Algorithm::logistic;
  if (t == "gaussian_nb" || t == "gnb") return Algorithm::gaussian_nb;
  if (t == "multinomial_nb" || t == "mnb") return Algorithm::multinomial_nb;
  if (t == "linear_regression" || t == "ln" || t == "ols") return Algorithm::linear_regression;
  if (t == "svm") throw UsageError("the RBF support vector machine is not available");
  throw UsageError("unknown algorithm '" + t + "'");
}

Task parse_task(std::string_view text) {
  const std::string t = to_lower(trim(text));
  if (t == "classification") return Task::classification;
  if (t == "ordinal") return Task::ordinal;
  if (t == "regression") return Task::regression;
  throw UsageError("unknown task '" + t + "'");
}

const std::vector<std::string>& allowed_keys(Algorithm a) {
  static const std::vector<std::string> tree{"max_depth"};
  static const std::vector<std::string> forest{"n_trees", "max_depth", "max_features", "bootstrap"};
  static const std::vector<std::string> boost{"n_trees", "max_depth", "learning_rate"};
  static const std::vector<std::string> logistic{"class_weight", "multi_class", "l2", "tol",
                                                 "max_iter"};
  static const std::vector<std::string> gnb{"var_smoothing"};
  static const std::vector<std::string> mnb{"alpha"};
  static const std::vector<std::string> none;
  switch (a) {
    case Algorithm::decision_tree: return tree;
    case Algorithm::random_forest: return forest;
    case Algorithm::gradient_boost:
    case Algorithm::adaboost: return boost;
    case Algorithm::logistic: return logistic;
    case Algorithm::gaussian_nb: return gnb;
    case Algorithm::multinomial_nb: return mnb;
    case Algorithm::linear_regression: return none;
  }
  return none;
}

const std::vector<std::string>& reserved_svm_keys() {
  static const std::vector<std::string> keys{"gamma", "kernel", "C"};
  return keys;
}

bool is_probabilistic(Algorithm a) { return a != Algorithm::linear_regression; }

bool supports_regression(Algorithm a) {
  switch (a) {
    case Algorithm::decision_tree:
    case Algorithm::random_forest:
    case Algorithm::gradient_boost:
    case Algorithm::adaboost:
    case Algorithm::linear_regression: return true;
    default: return false;
  }
}

void LearnerConfig::validate() const {
  const auto& ok = allowed_keys(algorithm);
  std::vector<std::string> bad;
  const auto& svm = reserved_svm_keys();
  for (const auto& [k, v] : hyperparams)
    if (std::find(ok.begin(), ok.end(), k) == ok.end() &&
        std::find(svm.begin(), svm.end(), k) == svm.end())
      bad.push_back(k);
  if (!bad.empty()) {
    std::string msg = to_string(algorithm) + " does not accept:";
    for (const auto& k : bad) msg += " " + k;
    throw UsageError(msg);
  }
}

std::string LearnerConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = hyperparams.find(key);
  return it == hyperparams.end() ? fallback : it->second;
}

int LearnerConfig::get_int(const std::string& key, int fallback) const {
  const auto it = hyperparams.find(key);
  if (it == hyperparams.end()) return fallback;
  const auto v = parse_int(it->second);
  if (!v) throw UsageError("hyperparameter " + key + " expects an integer, got '" + it->second + "'");
  return static_cast<int>(*v);
}

double LearnerConfig::get_double(const std::string& key, double fallback) const {
  const auto it = hyperparams.find(key);
  if (it == hyperparams.end()) return fallback;
  const auto v = parse_double(it->second);
  if (!v) throw UsageError("hyperparameter " + key + " expects a number, got '" + it->second + "'");
  return *v;
}

int LearnerConfig::max_depth(int fallback) const {
  const auto it = hyperparams.find("max_depth");
  if (it == hyperparams.end()) return fallback;
  const std::string v = to_lower(trim(it->second));
  if (v == "none" || v == "inf" || v == "pure") return 0;
  const int d = get_int("max_depth", fallback);
  if (d < 0) throw UsageError("max_depth must be >= 0");
  return d;
}

std::string LearnerConfig::describe() const {
  std::string out = to_string(algorithm) + "{";
  bool first = true;
  for (const auto& [k, v] : hyperparams) {
    if (!first) out += ",";
    out += k + "=" + v;
    first = false;
  }
  return out + "}";
}

}  // namespace parkcharge::learners
