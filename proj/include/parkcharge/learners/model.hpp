#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "parkcharge/features.hpp"
#include "parkcharge/learners/config.hpp"
#include "parkcharge/learners/estimator.hpp"

namespace parkcharge::learners {

struct TrainedModel {
  LearnerConfig config;
  std::vector<std::string> columns;
  std::map<std::string, std::vector<std::size_t>> groups;
  int num_classes = 0;
  std::shared_ptr<const Estimator> estimator;
  std::vector<std::string> warnings;
  /// Free-form provenance saved with the model (feature spec, scheme, ...).
  std::map<std::string, std::string> metadata;

  std::string schema_hash() const;
};

/// Hash of the ordered column names.
std::string schema_hash(const std::vector<std::string>& columns);

TrainedModel fit(const LearnerConfig& config, const features::FeatureMatrix& m);

/// K-1 binary models for y > k built from `base` (task is ignored).
TrainedModel ordinal_wrap(const LearnerConfig& base, const features::FeatureMatrix& m);

/// Bare estimator fits used by fit(); exposed for baselines and tests.
std::unique_ptr<Estimator> fit_classifier(const LearnerConfig& config, const Matrix& x,
                                          std::span<const int> y, int num_classes);
std::unique_ptr<Estimator> fit_regressor(const LearnerConfig& config, const Matrix& x,
                                         std::span<const double> y);

/// Throws UsageError unless `columns` matches the model schema exactly.
void check_schema(const TrainedModel& model, const std::vector<std::string>& columns);

Matrix predict_proba(const TrainedModel& model, const features::FeatureMatrix& m);
/// Class indices for every task; regression outputs go through regression_to_class.
std::vector<int> predict_classes(const TrainedModel& model, const features::FeatureMatrix& m);
/// Raw continuous outputs. Regression task only.
std::vector<double> predict_values(const TrainedModel& model, const features::FeatureMatrix& m);

/// Round half away from zero, clamp to [0, K-1].
int regression_to_class(double value, int num_classes);

struct Importance {
  std::string method;  ///< "impurity" or "permutation"
  std::map<std::string, double> score;  ///< normalised to sum 1 (all zero if nothing helps)
  std::map<std::string, double> raw;
};

/// Impurity importance summed per feature group when the model has one;
/// otherwise permutation importance (MAE increase, 10 shuffles per group) on
/// `held_out`. Throws UsageError when neither is possible.
Importance feature_importance(const TrainedModel& model,
                              const features::FeatureMatrix* held_out = nullptr,
                              std::uint64_t seed = 0, int repeats = 10);

Json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const Json& j);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

inline constexpr const char* kModelFormat = "parkcharge-model";
inline constexpr int kModelVersion = 1;

}  // namespace parkcharge::learners
