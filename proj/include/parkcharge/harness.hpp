#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "parkcharge/events.hpp"
#include "parkcharge/features.hpp"
#include "parkcharge/learners/model.hpp"
#include "parkcharge/spatial.hpp"

namespace parkcharge::harness {

using learners::Algorithm;
using learners::Task;

struct Split {
  std::vector<events::LabeledEvent> train;
  std::vector<events::LabeledEvent> test;
};

/// Sort by (t_start, event id); the first floor(ratio * n) events train.
Split time_ordered_split(std::span<const events::LabeledEvent> events, double ratio = 0.8);

/// Fold index per row: each class is shuffled with `seed` and dealt round-robin.
std::vector<int> stratified_kfold(std::span<const int> targets, int k, std::uint64_t seed);

struct Metrics {
  double mae = 0.0;
  double micro_f1 = 0.0;
  /// Mean F1 over the classes present in y_true.
  double macro_f1 = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
};

Metrics metrics(std::span<const int> y_true, std::span<const int> y_pred, int num_classes);

enum class BaselineKind { random, longest, shortest, majority, gaussian_nb, multinomial_nb, ols };
std::string to_string(BaselineKind b);

struct BaselineResult {
  BaselineKind kind;
  std::vector<int> predictions;
  std::vector<double> values;  ///< continuous outputs, ols only
  Metrics metrics;
};

/// Constant and random predictors for every task, naive Bayes for
/// classification/ordinal and least squares for regression, trained on
/// `train` and scored on `test`.
std::vector<BaselineResult> run_baselines(const features::FeatureMatrix& train,
                                          const features::FeatureMatrix& test, Task task,
                                          std::uint64_t seed);
/// Lowest MAE; ties go to the earlier entry.
const BaselineResult& strongest(const std::vector<BaselineResult>& baselines);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
  bool significant = false;  ///< p < 0.05
  bool degenerate = false;   ///< zero variance of the differences
};

/// Two-tailed dependent t-test on a - b.
TTest paired_ttest(std::span<const double> a, std::span<const double> b);

/// (baseline - model) / baseline * 100; 0 when the baseline is 0.
double improvement_lower_better(double model, double baseline);
/// (model - baseline) / baseline * 100; 0 when the baseline is 0.
double improvement_higher_better(double model, double baseline);

using Grid = std::vector<std::map<std::string, std::string>>;

/// Default learner grid for one algorithm; a single empty point when it has none.
Grid default_grid(Algorithm a);

struct SpatialCandidate {
  spatial::Algorithm algorithm = spatial::Algorithm::kmeans;
  spatial::KMeansParams kmeans;
  spatial::DbscanParams dbscan;

  std::string describe() const;
};

/// kmeans k in 2..6 followed by dbscan eps in {50,...,150} x min_samples in {2,3,4}.
std::vector<SpatialCandidate> default_spatial_grid(std::uint64_t seed);

spatial::SpatialModel fit_spatial(const SpatialCandidate& c, const ingest::SlotLayout& layout);

struct GridPoint {
  learners::LearnerConfig config;
  std::size_t matrix = 0;  ///< index into the candidate matrices
};

struct GridOutcome {
  std::size_t best = 0;
  std::vector<double> scores;  ///< mean fold score per point; NaN when the point failed
  std::vector<std::string> errors;
};

/// Mean k-fold score per point: micro-F1 (maximised) for classification,
/// MAE (minimised) for ordinal and regression. Ties go to the earlier point.
GridOutcome grid_search(const std::vector<const features::FeatureMatrix*>& matrices,
                        const std::vector<GridPoint>& points, int folds, std::uint64_t seed,
                        int jobs);

struct ExperimentPlan {
  std::string dataset_id = "dataset";
  events::ClassScheme scheme = events::ClassScheme::low();
  std::vector<Task> approaches{Task::classification, Task::ordinal, Task::regression};
  std::vector<std::string> feature_specs{"all", "all+spt+ocy"};
  std::vector<Algorithm> classifiers{Algorithm::decision_tree, Algorithm::random_forest,
                                     Algorithm::gradient_boost, Algorithm::adaboost,
                                     Algorithm::logistic};
  std::vector<Algorithm> regressors{Algorithm::decision_tree, Algorithm::random_forest,
                                    Algorithm::gradient_boost, Algorithm::adaboost};
  /// Overrides default_grid per algorithm.
  std::map<Algorithm, Grid> grids;
  /// Empty means default_spatial_grid(seed).
  std::vector<SpatialCandidate> spatial_grid;
  std::uint64_t seed = 0;
  double split_ratio = 0.8;
  int folds = 5;
  int jobs = 0;
};

struct ExperimentData {
  std::vector<ingest::OccupancyFrame> frames;
  ingest::SlotLayout layout;
  std::vector<events::ParkingEvent> events;  ///< cleaned
};

struct ResultRecord {
  Task approach = Task::classification;
  std::string algorithm;  ///< learner name, or "baseline:<kind>"
  std::string feature_spec;
  std::string spatial;  ///< selected spatial model, empty when unused
  std::map<std::string, std::string> hyperparams;
  double cv_score = 0.0;
  Metrics metrics;
  double mae_improvement = 0.0;
  double micro_f1_improvement = 0.0;
  double macro_f1_improvement = 0.0;
  std::string reference_baseline;
  std::optional<TTest> ttest;
  std::optional<double> r2;
};

struct ImportanceRecord {
  Task approach = Task::classification;
  std::string feature_spec;
  std::string algorithm;
  std::string method;
  std::map<std::string, double> score;
};

struct ExperimentReport {
  std::vector<ResultRecord> records;
  std::vector<ImportanceRecord> importance;
  std::size_t train_events = 0;
  std::size_t test_events = 0;
  std::string dataset_hash;
  std::vector<std::string> warnings;
};

/// Hash of the cleaned events and frames.
std::string dataset_hash(const ExperimentData& data);

ExperimentReport run_experiment(const ExperimentPlan& plan, const ExperimentData& data);

/// report.json, report.csv and importance.csv under `dir`.
void write_report(const ExperimentPlan& plan, const ExperimentReport& report,
                  const std::filesystem::path& dir);

/// Plain-text table of the records for standard output.
std::string format_table(const ExperimentReport& report);

/// Coefficient of determination of continuous predictions.
double r_squared(std::span<const double> y_true, std::span<const double> y_pred);

}  // namespace parkcharge::harness
