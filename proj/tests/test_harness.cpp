#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "parkcharge/harness.hpp"
#include "parkcharge/rng.hpp"
#include "support/metric_oracle.hpp"
#include "support/synthetic.hpp"
#include "support/temp_dir.hpp"

using namespace parkcharge;
using namespace parkcharge::harness;
using events::LabeledEvent;

namespace {

LabeledEvent labeled(events::EventId id, TimePoint t, int label) {
  LabeledEvent e;
  e.event.id = id;
  e.event.start = t;
  e.event.duration_min = 30;
  e.label = label;
  return e;
}

features::FeatureMatrix targets_only(std::vector<int> y, int k) {
  features::FeatureMatrix m;
  m.x = Matrix(y.size(), 1, 1.0);
  m.columns = {"h"};
  m.groups["h"] = {0};
  m.targets = std::move(y);
  m.num_classes = k;
  return m;
}

}  // namespace

TEST(Split, TimeOrderedEightyTwenty) {
  std::vector<LabeledEvent> ev;
  for (int i = 0; i < 10; ++i)
    ev.push_back(labeled(static_cast<events::EventId>(9 - i), make_time(2015, 11, 12, 8 + i, 0), 0));
  const auto s = time_ordered_split(ev, 0.8);
  ASSERT_EQ(s.train.size(), 8u);
  ASSERT_EQ(s.test.size(), 2u);
  for (const auto& a : s.train)
    for (const auto& b : s.test) EXPECT_LE(a.event.start, b.event.start);
}

TEST(Split, EqualTimestampsBreakOnId) {
  std::vector<LabeledEvent> ev;
  const auto t = make_time(2015, 11, 12, 8, 0);
  for (events::EventId id : {4, 2, 0, 3, 1}) ev.push_back(labeled(id, t, 0));
  const auto s = time_ordered_split(ev, 0.6);
  ASSERT_EQ(s.train.size(), 3u);
  EXPECT_EQ(s.train[0].event.id, 0u);
  EXPECT_EQ(s.train[2].event.id, 2u);
  EXPECT_EQ(s.test[0].event.id, 3u);
}

TEST(Split, FloorArithmeticAndErrors) {
  std::vector<LabeledEvent> ev;
  for (int i = 0; i < 3552; ++i)
    ev.push_back(labeled(static_cast<events::EventId>(i), make_time(2015, 11, 12, 0, 0) + std::chrono::minutes(i), 0));
  const auto s = time_ordered_split(ev, 0.8);
  EXPECT_EQ(s.train.size(), 2841u);
  EXPECT_EQ(s.test.size(), 711u);
  EXPECT_THROW(time_ordered_split(std::span(ev).first(1), 0.8), DataError);
  EXPECT_THROW(time_ordered_split(ev, 1.0), UsageError);
  EXPECT_THROW(time_ordered_split(ev, 0.0), UsageError);
}

TEST(Folds, StratifiedProportions) {
  std::vector<int> y(100);
  for (int i = 0; i < 100; ++i) y[i] = i < 60 ? 0 : 1;
  const auto f = stratified_kfold(y, 5, 3);
  std::vector<std::array<int, 2>> counts(5, {0, 0});
  for (int i = 0; i < 100; ++i) ++counts[f[i]][y[i]];
  for (const auto& c : counts) {
    EXPECT_EQ(c[0], 12);
    EXPECT_EQ(c[1], 8);
  }
  EXPECT_EQ(stratified_kfold(y, 5, 3), f);
}

TEST(Folds, SmallClassSpreadsOverDistinctFolds) {
  std::vector<int> y(40, 0);
  y[5] = y[17] = y[33] = 1;
  const auto f = stratified_kfold(y, 5, 8);
  EXPECT_EQ((std::set<int>{f[5], f[17], f[33]}).size(), 3u);
  EXPECT_THROW(stratified_kfold(std::vector<int>{0, 1, 0}, 5, 1), DataError);
  EXPECT_THROW(stratified_kfold(y, 1, 1), UsageError);
}

TEST(Folds, ProportionsWithinOneOnRandomLabels) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const int k = 2 + static_cast<int>(uniform_index(rng, 5));
    const int classes = 2 + static_cast<int>(uniform_index(rng, 4));
    std::vector<int> y(30 + uniform_index(rng, 100));
    for (auto& v : y) v = static_cast<int>(uniform_index(rng, classes));
    const auto f = stratified_kfold(y, k, t);
    for (int c = 0; c < classes; ++c) {
      const auto n_c = std::count(y.begin(), y.end(), c);
      for (int fold = 0; fold < k; ++fold) {
        long in = 0;
        for (std::size_t i = 0; i < y.size(); ++i) in += y[i] == c && f[i] == fold;
        EXPECT_LE(std::abs(static_cast<double>(in) - static_cast<double>(n_c) / k), 1.0);
      }
    }
  }
}

TEST(Metrics, HandComputedExample) {
  const std::vector<int> t{0, 0, 1, 2}, p{0, 1, 1, 2};
  const auto m = metrics(t, p, 3);
  EXPECT_DOUBLE_EQ(m.mae, 0.25);
  EXPECT_DOUBLE_EQ(m.micro_f1, 0.75);
  EXPECT_NEAR(m.macro_f1, 0.778, 0.001);
  EXPECT_NEAR(m.macro_f1, (2.0 / 3 + 2.0 / 3 + 1.0) / 3, 1e-15);
}

TEST(Metrics, PerfectAndConstantWrong) {
  const std::vector<int> t{0, 1, 2, 2};
  const auto perfect = metrics(t, t, 3);
  EXPECT_EQ(perfect.mae, 0.0);
  EXPECT_EQ(perfect.micro_f1, 1.0);
  EXPECT_EQ(perfect.macro_f1, 1.0);
  const std::vector<int> zeros(4, 0), twos(4, 2);
  EXPECT_EQ(metrics(zeros, twos, 3).mae, 2.0);
  EXPECT_THROW(metrics(zeros, std::vector<int>{0}, 3), UsageError);
}

TEST(Metrics, AgreesWithOracleOnRandomVectors) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = trial % 2 ? 3 : 6;
    std::vector<int> t(1 + uniform_index(rng, 40)), p(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<int>(uniform_index(rng, k));
      p[i] = static_cast<int>(uniform_index(rng, k));
    }
    const auto a = metrics(t, p, k);
    const auto b = test::oracle_metrics(t, p, k);
    EXPECT_NEAR(a.mae, b.mae, 1e-12);
    EXPECT_NEAR(a.micro_f1, b.micro_f1, 1e-12);
    EXPECT_NEAR(a.macro_f1, b.macro_f1, 1e-12);
    for (int c = 0; c < k; ++c) {
      EXPECT_NEAR(a.precision[c], b.precision[c], 1e-12);
      EXPECT_NEAR(a.recall[c], b.recall[c], 1e-12);
    }
  }
}

TEST(Baselines, ConstantPredictors) {
  std::vector<int> train;
  for (int i = 0; i < 100; ++i) train.push_back(i < 9 ? 0 : i < 40 ? 1 : 2);
  const std::vector<int> test{0, 1, 2, 2, 1, 2};
  const auto res = run_baselines(targets_only(train, 3), targets_only(test, 3), Task::classification, 1);
  std::map<BaselineKind, const BaselineResult*> by;
  for (const auto& r : res) by[r.kind] = &r;
  EXPECT_EQ(by.count(BaselineKind::ols), 0u);
  EXPECT_EQ(by.at(BaselineKind::majority)->predictions, std::vector<int>(6, 2));
  EXPECT_EQ(by.at(BaselineKind::shortest)->predictions, std::vector<int>(6, 0));
  EXPECT_EQ(by.at(BaselineKind::longest)->predictions, std::vector<int>(6, 2));
  EXPECT_DOUBLE_EQ(by.at(BaselineKind::shortest)->metrics.mae, 8.0 / 6);
  // majority micro-F1 equals the test frequency of the majority class
  EXPECT_DOUBLE_EQ(by.at(BaselineKind::majority)->metrics.micro_f1, 0.5);
  EXPECT_EQ(strongest(res).metrics.mae, std::min_element(res.begin(), res.end(), [](auto& a, auto& b) {
              return a.metrics.mae < b.metrics.mae;
            })->metrics.mae);

  const auto reg = run_baselines(targets_only(train, 3), targets_only(test, 3), Task::regression, 1);
  bool has_ols = false;
  for (const auto& r : reg)
    if (r.kind == BaselineKind::ols) {
      has_ols = true;
      EXPECT_EQ(r.values.size(), test.size());
    }
  EXPECT_TRUE(has_ols);
}

TEST(Baselines, RandomMaeOnUniformTruth) {
  // exhaustive 3x3 table
  double total = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) total += std::abs(a - b);
  EXPECT_DOUBLE_EQ(total / 9, 8.0 / 9);
  std::vector<int> truth;
  for (int i = 0; i < 30000; ++i) truth.push_back(i % 3);
  const auto res = run_baselines(targets_only(truth, 3), targets_only(truth, 3), Task::classification, 5);
  for (const auto& r : res)
    if (r.kind == BaselineKind::random) EXPECT_NEAR(r.metrics.mae, 8.0 / 9, 0.02);
}

TEST(TTest, KnownStatistic) {
  const std::vector<double> a{2, 2, 2, 0}, b{1, 1, 1, 1};
  const auto t = paired_ttest(a, b);
  EXPECT_NEAR(t.t, 1.0, 1e-12);
  EXPECT_EQ(t.df, 3);
  EXPECT_NEAR(t.p, 0.391, 0.001);
  EXPECT_FALSE(t.significant);
}

TEST(TTest, DegenerateCases) {
  const std::vector<double> a{1, 2, 3}, b{0, 1, 2};
  const auto same = paired_ttest(a, a);
  EXPECT_EQ(same.p, 1.0);
  EXPECT_TRUE(same.degenerate);
  const auto shifted = paired_ttest(a, b);
  EXPECT_TRUE(shifted.degenerate);
  EXPECT_EQ(shifted.p, 0.0);
  EXPECT_THROW(paired_ttest(std::vector<double>{1}, std::vector<double>{1}), UsageError);
}

TEST(Improvement, SignConventions) {
  EXPECT_NEAR(improvement_lower_better(0.316, 0.589), 46.3, 0.05);
  EXPECT_EQ(improvement_lower_better(0.5, 0.5), 0.0);
  EXPECT_NEAR(improvement_higher_better(0.6, 0.5), 20.0, 1e-12);
  EXPECT_EQ(improvement_higher_better(0.6, 0.0), 0.0);
}

TEST(Grids, PaperValues) {
  EXPECT_EQ(default_grid(Algorithm::decision_tree).size(), 3u);
  EXPECT_EQ(default_grid(Algorithm::random_forest).size(), 9u);
  EXPECT_EQ(default_grid(Algorithm::logistic).size(), 4u);
  EXPECT_EQ(default_grid(Algorithm::gaussian_nb).size(), 1u);
  std::set<std::string> trees;
  for (const auto& p : default_grid(Algorithm::gradient_boost)) trees.insert(p.at("n_trees"));
  EXPECT_EQ(trees, (std::set<std::string>{"50", "100", "150"}));
  const auto sg = default_spatial_grid(0);
  EXPECT_EQ(sg.size(), 5u + 15u);
  EXPECT_EQ(sg.front().kmeans.k, 2);
  EXPECT_EQ(sg[4].kmeans.k, 6);
  EXPECT_EQ(sg[5].dbscan.eps, 50.0);
  EXPECT_EQ(sg.back().dbscan.eps, 150.0);
  EXPECT_EQ(sg.back().dbscan.min_samples, 4);
}

TEST(GridSearch, TiesGoToTheEarlierPoint) {
  auto m = targets_only(std::vector<int>(50, 0), 2);
  for (int i = 0; i < 50; i += 2) m.targets[i] = 1;
  for (std::size_t i = 0; i < 50; ++i) m.x(i, 0) = static_cast<double>(i % 2);
  learners::LearnerConfig c;
  c.algorithm = Algorithm::decision_tree;
  c.hyperparams = {{"max_depth", "2"}};
  auto c2 = c;
  c2.hyperparams = {{"max_depth", "3"}};
  const std::vector<const features::FeatureMatrix*> mats{&m};
  const auto single = grid_search(mats, {{c, 0}}, 5, 1, 1);
  EXPECT_EQ(single.best, 0u);
  const auto tie = grid_search(mats, {{c2, 0}, {c, 0}}, 5, 1, 2);
  EXPECT_EQ(tie.scores[0], tie.scores[1]);
  EXPECT_EQ(tie.best, 0u);
}

TEST(GridSearch, FailedPointsAreSkippedAndAllFailingIsAnError) {
  auto m = targets_only(std::vector<int>(20, 0), 2);
  for (int i = 0; i < 20; i += 2) m.targets[i] = 1;
  learners::LearnerConfig bad;
  bad.algorithm = Algorithm::decision_tree;
  bad.hyperparams = {{"max_depth", "banana"}};
  learners::LearnerConfig good;
  const std::vector<const features::FeatureMatrix*> mats{&m};
  const auto out = grid_search(mats, {{bad, 0}, {good, 0}}, 2, 1, 2);
  EXPECT_TRUE(std::isnan(out.scores[0]));
  EXPECT_EQ(out.best, 1u);
  EXPECT_THROW(grid_search(mats, {{bad, 0}}, 2, 1, 1), DataError);
}

class ExperimentFixture : public ::testing::Test {
protected:
  void SetUp() override {
    auto lot = test::make_synthetic_lot({.slots = 24, .days = 6, .seed = 2});
    data.frames = lot.frames;
    data.layout = lot.layout;
    data.events = events::clean_events(events::extract_events(lot.frames), lot.frames);
    plan.classifiers = {Algorithm::decision_tree, Algorithm::logistic};
    plan.regressors = {Algorithm::decision_tree};
    plan.grids[Algorithm::decision_tree] = {{{"max_depth", "2"}}, {{"max_depth", "3"}}};
    plan.grids[Algorithm::logistic] = {{{"class_weight", "uniform"}}};
    SpatialCandidate k4;
    k4.kmeans = {4, 1};
    SpatialCandidate k2;
    k2.kmeans = {2, 1};
    plan.spatial_grid = {k2, k4};
    plan.folds = 3;
    plan.jobs = 2;
    plan.seed = 11;
  }
  ExperimentPlan plan;
  ExperimentData data;
};

TEST_F(ExperimentFixture, ProducesRecordsForEveryApproach) {
  const auto r = run_experiment(plan, data);
  EXPECT_EQ(r.train_events + r.test_events, data.events.size());
  std::set<Task> seen;
  for (const auto& rec : r.records) {
    seen.insert(rec.approach);
    EXPECT_GE(rec.metrics.mae, 0.0);
    EXPECT_GE(rec.metrics.micro_f1, 0.0);
    EXPECT_LE(rec.metrics.micro_f1, 1.0);
    EXPECT_LE(rec.metrics.macro_f1, 1.0);
    if (rec.algorithm.rfind("baseline:", 0) != 0) {
      EXPECT_FALSE(rec.reference_baseline.empty());
      EXPECT_TRUE(rec.ttest.has_value());
      if (rec.feature_spec == "all+spt+ocy") EXPECT_FALSE(rec.spatial.empty());
    }
  }
  EXPECT_EQ(seen.size(), 3u);
  bool has_r2 = false;
  for (const auto& rec : r.records) has_r2 |= rec.r2.has_value();
  EXPECT_TRUE(has_r2);
  EXPECT_FALSE(r.importance.empty());
  for (const auto& imp : r.importance) {
    double s = 0;
    for (const auto& [k, v] : imp.score) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST_F(ExperimentFixture, ReportsAreByteIdenticalAcrossRuns) {
  test::TempDir a, b;
  write_report(plan, run_experiment(plan, data), a.path());
  plan.jobs = 1;
  write_report(plan, run_experiment(plan, data), b.path());
  for (const auto* f : {"report.csv", "importance.csv"})
    EXPECT_EQ(test::read_file(a / f), test::read_file(b / f)) << f;
  EXPECT_FALSE(test::read_file(a / "report.json").empty());
}

TEST_F(ExperimentFixture, EmptyApproachListGivesEmptyReport) {
  plan.approaches.clear();
  const auto r = run_experiment(plan, data);
  EXPECT_TRUE(r.records.empty());
  test::TempDir dir;
  write_report(plan, r, dir.path());
  EXPECT_TRUE(std::filesystem::exists(dir / "report.json"));
}

TEST(RSquared, PerfectAndMean) {
  const std::vector<double> y{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(r_squared(y, y), 1.0);
  EXPECT_DOUBLE_EQ(r_squared(y, std::vector<double>(4, 2.5)), 0.0);
}
