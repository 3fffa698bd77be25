#pragma once

#include <vector>

#include "parkcharge/learners/tree.hpp"

namespace parkcharge::learners {

struct ForestParams {
  int n_trees = 100;
  TreeParams tree;
  bool bootstrap = true;
};

/// Bagged CART trees with per-split feature subsampling.
class RandomForest final : public Estimator {
public:
  static RandomForest fit_classifier(const Matrix& x, std::span<const int> y, int num_classes,
                                     const ForestParams& params, std::uint64_t seed);
  static RandomForest fit_regressor(const Matrix& x, std::span<const double> y,
                                    const ForestParams& params, std::uint64_t seed);
  static RandomForest from_json(const Json& j);

  std::string kind() const override { return "random_forest"; }
  bool probabilistic() const override { return classifier_; }
  Matrix predict_proba(const Matrix& x) const override;
  std::vector<double> predict_values(const Matrix& x) const override;
  std::optional<std::vector<double>> impurity_importance() const override;
  Json to_json() const override;

  const std::vector<DecisionTree>& trees() const { return trees_; }

private:
  bool classifier_ = true;
  int num_classes_ = 1;
  std::size_t num_features_ = 0;
  std::vector<DecisionTree> trees_;
};

struct BoostParams {
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.1;
};

/// Stagewise additive regression trees. Classification minimises softmax
/// log-loss with one tree per class per stage and Newton leaf values;
/// regression minimises squared error. A stage that would raise the training
/// loss is shrunk by halving until it does not.
class GradientBoost final : public Estimator {
public:
  static GradientBoost fit_classifier(const Matrix& x, std::span<const int> y, int num_classes,
                                      const BoostParams& params, std::uint64_t seed);
  static GradientBoost fit_regressor(const Matrix& x, std::span<const double> y,
                                     const BoostParams& params, std::uint64_t seed);
  static GradientBoost from_json(const Json& j);

  std::string kind() const override { return "gradient_boost"; }
  bool probabilistic() const override { return classifier_; }
  Matrix predict_proba(const Matrix& x) const override;
  std::vector<double> predict_values(const Matrix& x) const override;
  std::optional<std::vector<double>> impurity_importance() const override;
  Json to_json() const override;

  /// Training loss before the first stage and after each stage.
  const std::vector<double>& loss_history() const { return loss_history_; }

private:
  std::vector<double> raw_scores(std::span<const double> row) const;

  bool classifier_ = true;
  int num_classes_ = 1;
  std::size_t num_features_ = 0;
  std::vector<double> init_;
  /// stages_[m][k]: tree for class k at stage m (one tree per stage for regression).
  std::vector<std::vector<DecisionTree>> stages_;
  std::vector<double> stage_scale_;
  std::vector<double> loss_history_;
};

/// SAMME for classification, AdaBoost.R2 (linear loss) for regression.
/// Boosting weights are passed to the base trees directly instead of resampling.
class AdaBoost final : public Estimator {
public:
  static AdaBoost fit_classifier(const Matrix& x, std::span<const int> y, int num_classes,
                                 const BoostParams& params, std::uint64_t seed);
  static AdaBoost fit_regressor(const Matrix& x, std::span<const double> y,
                                const BoostParams& params, std::uint64_t seed);
  static AdaBoost from_json(const Json& j);

  std::string kind() const override { return "adaboost"; }
  bool probabilistic() const override { return classifier_; }
  Matrix predict_proba(const Matrix& x) const override;
  std::vector<double> predict_values(const Matrix& x) const override;
  std::optional<std::vector<double>> impurity_importance() const override;
  Json to_json() const override;

  const std::vector<double>& estimator_weights() const { return alphas_; }

private:
  bool classifier_ = true;
  int num_classes_ = 1;
  std::size_t num_features_ = 0;
  std::vector<DecisionTree> trees_;
  std::vector<double> alphas_;
};

}  // namespace parkcharge::learners
