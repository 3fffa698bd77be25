#include "parkcharge/learners/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "parkcharge/common.hpp"
#include "parkcharge/learners/ensemble.hpp"
#include "parkcharge/learners/linear.hpp"
#include "parkcharge/learners/naive_bayes.hpp"
#include "parkcharge/learners/ordinal.hpp"
#include "parkcharge/learners/tree.hpp"
#include "parkcharge/rng.hpp"

namespace parkcharge::learners {

namespace {

int forest_max_features(const LearnerConfig& c, std::size_t f, bool classifier) {
  const std::string v = to_lower(c.get("max_features", "auto"));
  if (v == "auto") {
    const double d = static_cast<double>(f);
    return static_cast<int>(std::ceil(classifier ? std::sqrt(d) : d / 3.0));
  }
  if (v == "sqrt") return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(f))));
  if (v == "all" || v == "none") return 0;
  const int n = c.get_int("max_features", 0);
  if (n < 0) throw UsageError("max_features must be >= 0");
  return n;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = to_lower(trim(text));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("hyperparameter " + key + " expects true/false, got '" + text + "'");
}

ForestParams forest_params(const LearnerConfig& c, std::size_t f, bool classifier) {
  ForestParams p;
  p.n_trees = c.get_int("n_trees", 100);
  p.tree.max_depth = c.max_depth(0);
  p.tree.max_features = forest_max_features(c, f, classifier);
  p.bootstrap = parse_bool("bootstrap", c.get("bootstrap", "true"));
  return p;
}

BoostParams boost_params(const LearnerConfig& c) {
  BoostParams p;
  p.n_trees = c.get_int("n_trees", 100);
  p.max_depth = c.max_depth(3);
  p.learning_rate = c.get_double("learning_rate", 0.1);
  if (p.n_trees < 1) throw UsageError("n_trees must be >= 1");
  if (!(p.learning_rate > 0)) throw UsageError("learning_rate must be > 0");
  return p;
}

LogisticParams logistic_params(const LearnerConfig& c) {
  LogisticParams p;
  const std::string w = to_lower(c.get("class_weight", "uniform"));
  if (w == "balanced")
    p.class_weight = ClassWeight::balanced;
  else if (w == "uniform" || w == "none")
    p.class_weight = ClassWeight::uniform;
  else
    throw UsageError("class_weight must be balanced or uniform, got '" + w + "'");
  const std::string mc = to_lower(c.get("multi_class", "auto"));
  if (mc == "auto" || mc == "multinomial")
    p.multi_class = MultiClass::automatic;
  else if (mc == "ovr")
    p.multi_class = MultiClass::ovr;
  else
    throw UsageError("multi_class must be auto or ovr, got '" + mc + "'");
  p.l2 = c.get_double("l2", 1.0);
  p.tol = c.get_double("tol", 1e-6);
  p.max_iter = c.get_int("max_iter", 1000);
  if (p.l2 < 0) throw UsageError("l2 must be >= 0");
  return p;
}

void check_features(const features::FeatureMatrix& m) {
  if (m.x.rows() == 0) throw DataError("cannot train on an empty feature matrix");
  if (m.targets.size() != m.x.rows()) throw DataError("feature matrix has mismatched targets");
  if (m.num_classes < 1) throw DataError("feature matrix has no class count");
}

std::size_t distinct_classes(std::span<const int> y) {
  return std::set<int>(y.begin(), y.end()).size();
}

TrainedModel shell(const LearnerConfig& config, const features::FeatureMatrix& m) {
  TrainedModel t;
  t.config = config;
  t.columns = m.columns;
  t.groups = m.groups;
  t.num_classes = m.num_classes;
  return t;
}

}  // namespace

std::string schema_hash(const std::vector<std::string>& columns) {
  std::uint64_t h = fnv1a("schema");
  for (const auto& c : columns) h = fnv1a(c + "\n", h);
  return hex64(h);
}

std::string TrainedModel::schema_hash() const { return learners::schema_hash(columns); }

std::unique_ptr<Estimator> fit_classifier(const LearnerConfig& c, const Matrix& x,
                                          std::span<const int> y, int k) {
  switch (c.algorithm) {
    case Algorithm::decision_tree: {
      TreeParams p;
      p.max_depth = c.max_depth(0);
      Rng rng(c.seed);
      const auto data = BinnedData::build(x);
      const std::vector<double> w(x.rows(), 1.0);
      return std::make_unique<DecisionTree>(DecisionTree::fit_classifier(data, y, k, w, p, rng));
    }
    case Algorithm::random_forest:
      return std::make_unique<RandomForest>(
          RandomForest::fit_classifier(x, y, k, forest_params(c, x.cols(), true), c.seed));
    case Algorithm::gradient_boost:
      return std::make_unique<GradientBoost>(
          GradientBoost::fit_classifier(x, y, k, boost_params(c), c.seed));
    case Algorithm::adaboost:
      return std::make_unique<AdaBoost>(AdaBoost::fit_classifier(x, y, k, boost_params(c), c.seed));
    case Algorithm::logistic:
      return std::make_unique<LogisticRegression>(
          LogisticRegression::fit(x, y, k, logistic_params(c)));
    case Algorithm::gaussian_nb:
      return std::make_unique<GaussianNB>(
          GaussianNB::fit(x, y, k, c.get_double("var_smoothing", 1e-9)));
    case Algorithm::multinomial_nb:
      return std::make_unique<MultinomialNB>(
          MultinomialNB::fit(x, y, k, c.get_double("alpha", 1.0)));
    case Algorithm::linear_regression:
      throw UsageError("linear_regression has no class probabilities; use the regression task");
  }
  throw UsageError("unknown algorithm");
}

std::unique_ptr<Estimator> fit_regressor(const LearnerConfig& c, const Matrix& x,
                                         std::span<const double> y) {
  switch (c.algorithm) {
    case Algorithm::decision_tree: {
      TreeParams p;
      p.max_depth = c.max_depth(0);
      Rng rng(c.seed);
      const auto data = BinnedData::build(x);
      const std::vector<double> w(x.rows(), 1.0);
      return std::make_unique<DecisionTree>(DecisionTree::fit_regressor(data, y, w, p, rng));
    }
    case Algorithm::random_forest:
      return std::make_unique<RandomForest>(
          RandomForest::fit_regressor(x, y, forest_params(c, x.cols(), false), c.seed));
    case Algorithm::gradient_boost:
      return std::make_unique<GradientBoost>(
          GradientBoost::fit_regressor(x, y, boost_params(c), c.seed));
    case Algorithm::adaboost:
      return std::make_unique<AdaBoost>(AdaBoost::fit_regressor(x, y, boost_params(c), c.seed));
    case Algorithm::linear_regression:
      return std::make_unique<LinearRegression>(LinearRegression::fit(x, y));
    default:
      throw UsageError(to_string(c.algorithm) + " does not support the regression task");
  }
}

TrainedModel fit(const LearnerConfig& config, const features::FeatureMatrix& m) {
  config.validate();
  check_features(m);
  if (config.task == Task::ordinal) return ordinal_wrap(config, m);
  TrainedModel t = shell(config, m);
  if (config.task == Task::regression) {
    const std::vector<double> y(m.targets.begin(), m.targets.end());
    auto est = fit_regressor(config, m.x, y);
    if (const auto* ols = dynamic_cast<const LinearRegression*>(est.get());
        ols && ols->rank_deficient())
      t.warnings.push_back("least-squares design is rank deficient; minimum-norm solution used");
    t.estimator = std::move(est);
    return t;
  }
  if (distinct_classes(m.targets) < 2)
    throw DataError("classification needs at least two classes in the training data");
  t.estimator = fit_classifier(config, m.x, m.targets, m.num_classes);
  return t;
}

TrainedModel ordinal_wrap(const LearnerConfig& base, const features::FeatureMatrix& m) {
  base.validate();
  check_features(m);
  if (m.num_classes < 2) throw UsageError("ordinal decomposition needs K >= 2");
  if (!is_probabilistic(base.algorithm))
    throw UsageError(to_string(base.algorithm) + " has no probability output for ordinal use");
  if (distinct_classes(m.targets) < 2)
    throw DataError("ordinal training needs at least two classes in the training data");
  TrainedModel t = shell(base, m);
  t.config.task = Task::ordinal;
  std::vector<OrdinalEstimator::Threshold> thresholds;
  std::vector<int> bin(m.targets.size());
  for (int k = 0; k + 1 < m.num_classes; ++k) {
    for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = m.targets[i] > k ? 1 : 0;
    OrdinalEstimator::Threshold th;
    if (distinct_classes(bin) < 2) {
      th.constant = static_cast<double>(bin[0]);
      t.warnings.push_back("ordinal threshold " + std::to_string(k) +
                           " has one class in training; constant prior used");
    } else {
      LearnerConfig sub = base;
      sub.task = Task::classification;
      sub.seed = mix_seed(base.seed, static_cast<std::uint64_t>(k));
      th.model = fit_classifier(sub, m.x, bin, 2);
    }
    thresholds.push_back(std::move(th));
  }
  t.estimator = std::make_shared<OrdinalEstimator>(m.num_classes, std::move(thresholds));
  return t;
}

void check_schema(const TrainedModel& model, const std::vector<std::string>& columns) {
  if (columns == model.columns) return;
  std::string msg = "feature schema mismatch: model expects " +
                    std::to_string(model.columns.size()) + " columns, matrix has " +
                    std::to_string(columns.size());
  for (std::size_t i = 0; i < std::min(columns.size(), model.columns.size()); ++i)
    if (columns[i] != model.columns[i]) {
      msg += "; first difference at column " + std::to_string(i) + " ('" + model.columns[i] +
             "' vs '" + columns[i] + "')";
      break;
    }
  throw UsageError(msg);
}

Matrix predict_proba(const TrainedModel& model, const features::FeatureMatrix& m) {
  check_schema(model, m.columns);
  if (model.config.task == Task::regression)
    throw UsageError("regression models have no class probabilities");
  return model.estimator->predict_proba(m.x);
}

std::vector<int> predict_classes(const TrainedModel& model, const features::FeatureMatrix& m) {
  check_schema(model, m.columns);
  std::vector<int> out(m.x.rows());
  if (model.config.task == Task::regression) {
    const auto v = model.estimator->predict_values(m.x);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = regression_to_class(v[i], model.num_classes);
    return out;
  }
  const Matrix p = model.estimator->predict_proba(m.x);
  for (std::size_t i = 0; i < p.rows(); ++i) out[i] = static_cast<int>(argmax(p.row(i)));
  return out;
}

std::vector<double> predict_values(const TrainedModel& model, const features::FeatureMatrix& m) {
  check_schema(model, m.columns);
  if (model.config.task != Task::regression)
    throw UsageError("continuous outputs exist only for the regression task");
  return model.estimator->predict_values(m.x);
}

int regression_to_class(double value, int num_classes) {
  if (num_classes < 2) throw UsageError("regression_to_class needs K >= 2");
  if (!std::isfinite(value)) throw DataError("non-finite regression output");
  const double r = std::round(value);
  return static_cast<int>(std::clamp(r, 0.0, static_cast<double>(num_classes - 1)));
}

namespace {

double mae(std::span<const int> a, std::span<const int> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return a.empty() ? 0.0 : s / static_cast<double>(a.size());
}

std::map<std::string, double> normalized(const std::map<std::string, double>& raw) {
  std::map<std::string, double> out;
  double total = 0;
  for (const auto& [k, v] : raw) total += std::max(0.0, v);
  for (const auto& [k, v] : raw) out[k] = total > 0 ? std::max(0.0, v) / total : 0.0;
  return out;
}

}  // namespace

Importance feature_importance(const TrainedModel& model, const features::FeatureMatrix* held_out,
                              std::uint64_t seed, int repeats) {
  Importance out;
  if (const auto imp = model.estimator->impurity_importance()) {
    out.method = "impurity";
    for (const auto& [name, cols] : model.groups) {
      double s = 0;
      for (auto c : cols) s += (*imp)[c];
      out.raw[name] = s;
    }
    out.score = normalized(out.raw);
    return out;
  }
  if (!held_out)
    throw UsageError(model.estimator->kind() +
                     " has no impurity importance; supply a held-out matrix for permutation mode");
  check_schema(model, held_out->columns);
  if (held_out->x.rows() == 0) throw DataError("held-out matrix is empty");
  out.method = "permutation";
  const double base = mae(predict_classes(model, *held_out), held_out->targets);
  Rng rng(seed);
  const std::size_t n = held_out->x.rows();
  for (const auto& [name, cols] : model.groups) {
    double total = 0;
    for (int r = 0; r < repeats; ++r) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      shuffle(std::span<std::size_t>(perm), rng);
      features::FeatureMatrix shuffled = *held_out;
      for (std::size_t i = 0; i < n; ++i)
        for (auto c : cols) shuffled.x(i, c) = held_out->x(perm[i], c);
      total += mae(predict_classes(model, shuffled), held_out->targets) - base;
    }
    out.raw[name] = total / repeats;
  }
  out.score = normalized(out.raw);
  return out;
}

Json model_to_json(const TrainedModel& model) {
  Json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["schema_hash"] = model.schema_hash();
  Json cfg;
  cfg["algorithm"] = to_string(model.config.algorithm);
  cfg["task"] = to_string(model.config.task);
  cfg["hyperparams"] = model.config.hyperparams;
  cfg["seed"] = model.config.seed;
  j["config"] = std::move(cfg);
  j["num_classes"] = model.num_classes;
  j["columns"] = model.columns;
  Json groups = Json::object();
  for (const auto& [k, v] : model.groups) groups[k] = v;
  j["groups"] = std::move(groups);
  j["warnings"] = model.warnings;
  j["metadata"] = model.metadata;
  j["estimator"] = model.estimator->to_json();
  return j;
}

TrainedModel model_from_json(const Json& j) {
  if (!j.contains("format") || j.at("format").get<std::string>() != kModelFormat)
    throw DataError("not a model file");
  const int version = j.at("version").get<int>();
  if (version != kModelVersion)
    throw DataError("model format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kModelVersion) + ")");
  TrainedModel t;
  const auto& cfg = j.at("config");
  t.config.algorithm = parse_algorithm(cfg.at("algorithm").get<std::string>());
  t.config.task = parse_task(cfg.at("task").get<std::string>());
  t.config.hyperparams = cfg.at("hyperparams").get<std::map<std::string, std::string>>();
  t.config.seed = cfg.at("seed").get<std::uint64_t>();
  t.num_classes = j.at("num_classes").get<int>();
  t.columns = j.at("columns").get<std::vector<std::string>>();
  for (const auto& [k, v] : j.at("groups").items()) t.groups[k] = v.get<std::vector<std::size_t>>();
  t.warnings = j.at("warnings").get<std::vector<std::string>>();
  t.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  if (j.at("schema_hash").get<std::string>() != t.schema_hash())
    throw DataError("model schema hash does not match its columns");
  t.estimator = estimator_from_json(j.at("estimator"));
  return t;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << model_to_json(model).dump(1) << '\n';
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace parkcharge::learners
