#include "parkcharge/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "parkcharge/common.hpp"
#include "parkcharge/learners/linear.hpp"
#include "parkcharge/learners/naive_bayes.hpp"
#include "parkcharge/parallel.hpp"
#include "parkcharge/rng.hpp"

namespace parkcharge::harness {

using events::LabeledEvent;
using features::FeatureMatrix;
using learners::Json;

Split time_ordered_split(std::span<const LabeledEvent> events, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("split ratio must lie in (0, 1)");
  if (events.size() < 2) throw DataError("need at least two events to split");
  std::vector<LabeledEvent> sorted(events.begin(), events.end());
  std::sort(sorted.begin(), sorted.end(), [](const LabeledEvent& a, const LabeledEvent& b) {
    if (a.event.start != b.event.start) return a.event.start < b.event.start;
    return a.event.id < b.event.id;
  });
  const double n = static_cast<double>(sorted.size());
  const auto cut = static_cast<std::size_t>(std::floor(ratio * n * (1.0 + 1e-12)));
  Split s;
  s.train.assign(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(cut));
  s.test.assign(sorted.begin() + static_cast<std::ptrdiff_t>(cut), sorted.end());
  return s;
}

std::vector<int> stratified_kfold(std::span<const int> targets, int k, std::uint64_t seed) {
  if (k < 2) throw UsageError("need at least two folds");
  if (static_cast<std::size_t>(k) > targets.size())
    throw DataError("cannot make " + std::to_string(k) + " folds from " +
                    std::to_string(targets.size()) + " rows");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < targets.size(); ++i) by_class[targets[i]].push_back(i);
  std::vector<int> fold(targets.size(), 0);
  std::size_t offset = 0;
  for (auto& [cls, rows] : by_class) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(cls)));
    shuffle(std::span<std::size_t>(rows), rng);
    for (std::size_t j = 0; j < rows.size(); ++j)
      fold[rows[j]] = static_cast<int>((offset + j) % static_cast<std::size_t>(k));
    offset += rows.size();
  }
  return fold;
}

Metrics metrics(std::span<const int> y_true, std::span<const int> y_pred, int num_classes) {
  if (y_true.size() != y_pred.size()) throw UsageError("metrics: length mismatch");
  if (y_true.empty()) throw UsageError("metrics: empty label vectors");
  if (num_classes < 1) throw UsageError("metrics: K must be positive");
  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<double> tp(k, 0), fp(k, 0), fn(k, 0);
  std::vector<bool> present(k, false);
  double abs_err = 0, correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i], p = y_pred[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
      throw UsageError("metrics: label outside [0, K-1]");
    abs_err += std::abs(t - p);
    present[static_cast<std::size_t>(t)] = true;
    if (t == p) {
      correct += 1;
      tp[static_cast<std::size_t>(t)] += 1;
    } else {
      fp[static_cast<std::size_t>(p)] += 1;
      fn[static_cast<std::size_t>(t)] += 1;
    }
  }
  const double n = static_cast<double>(y_true.size());
  Metrics m;
  m.mae = abs_err / n;
  const double stp = correct, sfp = n - correct, sfn = n - correct;
  const double denom = 2 * stp + sfp + sfn;
  m.micro_f1 = denom > 0 ? 2 * stp / denom : 0.0;
  m.precision.resize(k);
  m.recall.resize(k);
  m.f1.resize(k);
  double macro = 0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < k; ++c) {
    m.precision[c] = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    m.recall[c] = tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
    const double d = m.precision[c] + m.recall[c];
    m.f1[c] = d > 0 ? 2 * m.precision[c] * m.recall[c] / d : 0.0;
    if (present[c]) {
      macro += m.f1[c];
      ++counted;
    }
  }
  m.macro_f1 = counted ? macro / static_cast<double>(counted) : 0.0;
  return m;
}

std::string to_string(BaselineKind b) {
  switch (b) {
    case BaselineKind::random: return "random";
    case BaselineKind::longest: return "longest";
    case BaselineKind::shortest: return "shortest";
    case BaselineKind::majority: return "majority";
    case BaselineKind::gaussian_nb: return "gaussian_nb";
    case BaselineKind::multinomial_nb: return "multinomial_nb";
    case BaselineKind::ols: return "ols";
  }
  return "?";
}

std::vector<BaselineResult> run_baselines(const FeatureMatrix& train, const FeatureMatrix& test,
                                          Task task, std::uint64_t seed) {
  const int k = train.num_classes;
  if (k < 1) throw DataError("baselines need a class count");
  if (test.x.rows() == 0) throw DataError("baselines need a non-empty test set");
  const std::size_t n = test.x.rows();
  std::vector<BaselineResult> out;
  auto add = [&](BaselineKind kind, std::vector<int> pred, std::vector<double> values = {}) {
    BaselineResult r{kind, std::move(pred), std::move(values), {}};
    r.metrics = metrics(test.targets, r.predictions, k);
    out.push_back(std::move(r));
  };

  Rng rng(seed);
  std::vector<int> random(n);
  for (auto& v : random) v = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
  add(BaselineKind::random, std::move(random));
  add(BaselineKind::longest, std::vector<int>(n, k - 1));
  add(BaselineKind::shortest, std::vector<int>(n, 0));

  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int y : train.targets) ++counts[static_cast<std::size_t>(y)];
  const auto majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  add(BaselineKind::majority, std::vector<int>(n, majority));

  auto classes_of = [&](const Matrix& p) {
    std::vector<int> pred(p.rows());
    for (std::size_t i = 0; i < p.rows(); ++i) pred[i] = static_cast<int>(learners::argmax(p.row(i)));
    return pred;
  };
  if (task == Task::regression) {
    const std::vector<double> y(train.targets.begin(), train.targets.end());
    const auto ols = learners::LinearRegression::fit(train.x, y);
    auto values = ols.predict_values(test.x);
    std::vector<int> pred(n);
    for (std::size_t i = 0; i < n; ++i) pred[i] = learners::regression_to_class(values[i], k);
    add(BaselineKind::ols, std::move(pred), std::move(values));
  } else {
    add(BaselineKind::gaussian_nb,
        classes_of(learners::GaussianNB::fit(train.x, train.targets, k).predict_proba(test.x)));
    add(BaselineKind::multinomial_nb,
        classes_of(learners::MultinomialNB::fit(train.x, train.targets, k).predict_proba(test.x)));
  }
  return out;
}

const BaselineResult& strongest(const std::vector<BaselineResult>& baselines) {
  if (baselines.empty()) throw std::invalid_argument("no baselines");
  std::size_t best = 0;
  for (std::size_t i = 1; i < baselines.size(); ++i)
    if (baselines[i].metrics.mae < baselines[best].metrics.mae) best = i;
  return baselines[best];
}

TTest paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("paired t-test: length mismatch");
  if (a.size() < 2) throw UsageError("paired t-test needs at least two pairs");
  const double n = static_cast<double>(a.size());
  double mean = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  TTest r;
  r.df = static_cast<int>(a.size()) - 1;
  const double sd = std::sqrt(ss / (n - 1));
  if (sd == 0.0) {
    r.degenerate = true;
    r.p = mean == 0.0 ? 1.0 : 0.0;
    r.significant = mean != 0.0;
    return r;
  }
  r.t = mean / (sd / std::sqrt(n));
  const boost::math::students_t dist(static_cast<double>(r.df));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.significant = r.p < 0.05;
  return r;
}

double improvement_lower_better(double model, double baseline) {
  return baseline == 0.0 ? 0.0 : (baseline - model) / baseline * 100.0;
}

double improvement_higher_better(double model, double baseline) {
  return baseline == 0.0 ? 0.0 : (model - baseline) / baseline * 100.0;
}

Grid default_grid(Algorithm a) {
  const std::vector<std::string> depths{"2", "3", "none"};
  Grid g;
  switch (a) {
    case Algorithm::decision_tree:
      for (const auto& d : depths) g.push_back({{"max_depth", d}});
      break;
    case Algorithm::random_forest:
    case Algorithm::gradient_boost:
    case Algorithm::adaboost:
      for (const char* t : {"50", "100", "150"})
        for (const auto& d : depths) g.push_back({{"n_trees", t}, {"max_depth", d}});
      break;
    case Algorithm::logistic:
      for (const char* w : {"balanced", "uniform"})
        for (const char* m : {"auto", "ovr"}) g.push_back({{"class_weight", w}, {"multi_class", m}});
      break;
    default: g.push_back({});
  }
  return g;
}

std::string SpatialCandidate::describe() const {
  if (algorithm == spatial::Algorithm::kmeans) return "kmeans(k=" + std::to_string(kmeans.k) + ")";
  return "dbscan(eps=" + format_double(dbscan.eps) + ",min=" + std::to_string(dbscan.min_samples) +
         ")";
}

std::vector<SpatialCandidate> default_spatial_grid(std::uint64_t seed) {
  std::vector<SpatialCandidate> out;
  for (int k = 2; k <= 6; ++k) {
    SpatialCandidate c;
    c.algorithm = spatial::Algorithm::kmeans;
    c.kmeans.k = k;
    c.kmeans.seed = seed;
    out.push_back(c);
  }
  for (double eps : {50.0, 75.0, 100.0, 125.0, 150.0})
    for (int ms : {2, 3, 4}) {
      SpatialCandidate c;
      c.algorithm = spatial::Algorithm::dbscan;
      c.dbscan.eps = eps;
      c.dbscan.min_samples = ms;
      out.push_back(c);
    }
  return out;
}

spatial::SpatialModel fit_spatial(const SpatialCandidate& c, const ingest::SlotLayout& layout) {
  return c.algorithm == spatial::Algorithm::kmeans ? spatial::kmeans_fit(layout, c.kmeans)
                                                   : spatial::dbscan_fit(layout, c.dbscan);
}

namespace {

FeatureMatrix subset(const FeatureMatrix& m, std::span<const std::size_t> rows) {
  FeatureMatrix out;
  out.x = m.x.select_rows(rows);
  out.columns = m.columns;
  out.groups = m.groups;
  out.num_classes = m.num_classes;
  out.targets.reserve(rows.size());
  for (auto r : rows) {
    out.targets.push_back(m.targets[r]);
    if (!m.event_ids.empty()) out.event_ids.push_back(m.event_ids[r]);
  }
  return out;
}

bool better(Task task, double candidate, double incumbent) {
  return task == Task::classification ? candidate > incumbent : candidate < incumbent;
}

}  // namespace

GridOutcome grid_search(const std::vector<const FeatureMatrix*>& matrices,
                        const std::vector<GridPoint>& points, int folds, std::uint64_t seed,
                        int jobs) {
  if (points.empty()) throw UsageError("grid search needs at least one grid point");
  if (matrices.empty()) throw UsageError("grid search needs a feature matrix");
  const auto& targets = matrices.front()->targets;
  for (const auto* m : matrices)
    if (m->targets != targets) throw std::invalid_argument("grid matrices disagree on targets");
  const auto fold_of = stratified_kfold(targets, folds, seed);
  std::vector<std::vector<std::size_t>> train_rows(static_cast<std::size_t>(folds));
  std::vector<std::vector<std::size_t>> test_rows(static_cast<std::size_t>(folds));
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    for (int f = 0; f < folds; ++f)
      (fold_of[i] == f ? test_rows : train_rows)[static_cast<std::size_t>(f)].push_back(i);

  const std::size_t nf = static_cast<std::size_t>(folds);
  std::vector<double> fold_score(points.size() * nf, 0.0);
  std::vector<std::string> fold_error(points.size() * nf);
  parallel_for(points.size() * nf, jobs, [&](std::size_t job) {
    const auto& point = points[job / nf];
    const std::size_t f = job % nf;
    try {
      const auto& m = *matrices.at(point.matrix);
      const auto train = subset(m, train_rows[f]);
      const auto test = subset(m, test_rows[f]);
      const auto model = learners::fit(point.config, train);
      const auto pred = learners::predict_classes(model, test);
      const auto mt = metrics(test.targets, pred, m.num_classes);
      fold_score[job] = point.config.task == Task::classification ? mt.micro_f1 : mt.mae;
    } catch (const std::exception& e) {
      fold_error[job] = "fold " + std::to_string(f) + ": " + e.what();
    }
  });

  GridOutcome out;
  out.scores.assign(points.size(), std::numeric_limits<double>::quiet_NaN());
  out.errors.assign(points.size(), "");
  std::optional<std::size_t> best;
  for (std::size_t p = 0; p < points.size(); ++p) {
    double sum = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      if (!fold_error[p * nf + f].empty() && out.errors[p].empty()) out.errors[p] = fold_error[p * nf + f];
      sum += fold_score[p * nf + f];
    }
    if (!out.errors[p].empty()) continue;
    out.scores[p] = sum / static_cast<double>(nf);
    if (!best || better(points[p].config.task, out.scores[p], out.scores[*best])) best = p;
  }
  if (!best) {
    std::string msg = "every grid point failed:";
    for (std::size_t p = 0; p < points.size(); ++p)
      msg += "\n  " + points[p].config.describe() + ": " + out.errors[p];
    throw DataError(msg);
  }
  out.best = *best;
  return out;
}

double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size() || y_true.empty())
    throw UsageError("r_squared: length mismatch or empty input");
  const double mean = std::accumulate(y_true.begin(), y_true.end(), 0.0) / static_cast<double>(y_true.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (ss_tot == 0) return ss_res == 0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

std::string dataset_hash(const ExperimentData& data) {
  std::uint64_t h = fnv1a("dataset");
  for (const auto& e : data.events) {
    const std::string line = e.dataset + "," + std::to_string(e.id) + "," +
                             std::to_string(value(e.slot)) + "," + format_iso(e.start) + "," +
                             std::to_string(e.duration_min) + "," +
                             std::string(to_string(e.weather)) + "\n";
    h = fnv1a(line, h);
  }
  for (const auto& f : data.frames) {
    const std::string line = f.dataset + "," + f.camera + "," + format_iso(f.timestamp) + "," +
                             std::to_string(value(f.slot)) + (f.busy ? ",1," : ",0,") +
                             std::string(to_string(f.weather)) + "\n";
    h = fnv1a(line, h);
  }
  for (const auto& s : data.layout) {
    std::string line = std::to_string(value(s.slot));
    if (s.position) line += "," + format_double(s.position->x) + "," + format_double(s.position->y);
    h = fnv1a(line + "\n", h);
  }
  return hex64(h);
}

namespace {

std::vector<double> residuals(std::span<const int> y_true, std::span<const int> y_pred) {
  std::vector<double> r(y_true.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::abs(y_true[i] - y_pred[i]);
  return r;
}

void fill_comparison(ResultRecord& rec, const BaselineResult& ref, std::span<const int> truth,
                     std::span<const int> pred) {
  rec.reference_baseline = to_string(ref.kind);
  rec.mae_improvement = improvement_lower_better(rec.metrics.mae, ref.metrics.mae);
  rec.micro_f1_improvement = improvement_higher_better(rec.metrics.micro_f1, ref.metrics.micro_f1);
  rec.macro_f1_improvement = improvement_higher_better(rec.metrics.macro_f1, ref.metrics.macro_f1);
  if (truth.size() >= 2) {
    const auto a = residuals(truth, pred);
    const auto b = residuals(truth, ref.predictions);
    rec.ttest = paired_ttest(a, b);
  }
}

bool uses_spatial(const features::FeatureSpec& s) { return s.use_spt || s.use_ocy; }

}  // namespace

ExperimentReport run_experiment(const ExperimentPlan& plan, const ExperimentData& data) {
  if (!(plan.split_ratio > 0.0 && plan.split_ratio < 1.0))
    throw UsageError("split ratio must lie in (0, 1)");
  ExperimentReport report;
  report.dataset_hash = dataset_hash(data);
  if (plan.approaches.empty()) return report;

  const auto labeled = events::label_events(data.events, plan.scheme);
  const auto split = time_ordered_split(labeled, plan.split_ratio);
  if (split.test.empty()) throw DataError("the split leaves no test events");
  report.train_events = split.train.size();
  report.test_events = split.test.size();
  const int k = plan.scheme.num_classes();
  const features::FrameIndex index(data.frames);
  std::set<SlotId> universe;
  for (const auto& s : data.layout) universe.insert(s.slot);
  for (const auto& e : data.events) universe.insert(e.slot);

  const bool has_geometry = std::any_of(data.layout.begin(), data.layout.end(),
                                        [](const auto& s) { return s.position.has_value(); });
  std::vector<SpatialCandidate> candidates =
      plan.spatial_grid.empty() ? default_spatial_grid(plan.seed) : plan.spatial_grid;
  std::vector<std::shared_ptr<const spatial::SpatialModel>> spatial_models;
  std::vector<std::string> spatial_names;
  auto ensure_spatial = [&] {
    if (!spatial_models.empty()) return;
    if (!has_geometry) {
      report.warnings.push_back("layout has no coordinates; spatial features use a single area");
      spatial_models.push_back(std::make_shared<spatial::SpatialModel>(spatial::single_area(data.layout)));
      spatial_names.push_back("single_area");
      return;
    }
    for (const auto& c : candidates) {
      spatial_models.push_back(std::make_shared<spatial::SpatialModel>(fit_spatial(c, data.layout)));
      spatial_names.push_back(c.describe());
    }
  };

  auto build = [&](const features::FeatureSpec& spec, const std::vector<LabeledEvent>& ev) {
    return features::build_matrix(ev, spec, index, universe, k);
  };

  features::FeatureSpec base_spec;
  base_spec.base = features::FeatureSpec::all_base();
  const auto base_train = build(base_spec, split.train);
  const auto base_test = build(base_spec, split.test);

  for (Task approach : plan.approaches) {
    const auto baselines = run_baselines(base_train, base_test, approach, plan.seed);
    const auto& ref = strongest(baselines);
    for (const auto& b : baselines) {
      ResultRecord rec;
      rec.approach = approach;
      rec.algorithm = "baseline:" + to_string(b.kind);
      rec.feature_spec = b.kind == BaselineKind::gaussian_nb || b.kind == BaselineKind::multinomial_nb ||
                                 b.kind == BaselineKind::ols
                             ? base_spec.name()
                             : "";
      rec.metrics = b.metrics;
      fill_comparison(rec, ref, base_test.targets, b.predictions);
      if (b.kind == BaselineKind::ols) {
        const std::vector<double> truth(base_test.targets.begin(), base_test.targets.end());
        rec.r2 = r_squared(truth, b.values);
      }
      report.records.push_back(std::move(rec));
    }

    for (const auto& spec_text : plan.feature_specs) {
      auto spec = features::FeatureSpec::parse(spec_text);
      std::vector<FeatureMatrix> train_m, test_m;
      std::vector<std::string> matrix_names;
      if (uses_spatial(spec)) {
        ensure_spatial();
        for (std::size_t i = 0; i < spatial_models.size(); ++i) {
          spec.spatial = spatial_models[i];
          train_m.push_back(build(spec, split.train));
          test_m.push_back(build(spec, split.test));
          matrix_names.push_back(spatial_names[i]);
        }
      } else {
        train_m.push_back(build(spec, split.train));
        test_m.push_back(build(spec, split.test));
        matrix_names.push_back("");
      }
      std::vector<const FeatureMatrix*> train_ptr;
      for (const auto& m : train_m) train_ptr.push_back(&m);

      const auto& algorithms = approach == Task::regression ? plan.regressors : plan.classifiers;
      std::optional<learners::TrainedModel> best_model;
      std::size_t best_matrix = 0;
      double best_mae = std::numeric_limits<double>::infinity();
      for (Algorithm alg : algorithms) {
        const auto git = plan.grids.find(alg);
        const Grid grid = git != plan.grids.end() ? git->second : default_grid(alg);
        std::vector<GridPoint> points;
        for (std::size_t mi = 0; mi < train_m.size(); ++mi)
          for (const auto& hp : grid) {
            GridPoint p;
            p.config.algorithm = alg;
            p.config.task = approach;
            p.config.hyperparams = hp;
            p.config.seed = plan.seed;
            p.matrix = mi;
            points.push_back(std::move(p));
          }
        GridOutcome outcome;
        try {
          outcome = grid_search(train_ptr, points, plan.folds, plan.seed, plan.jobs);
        } catch (const std::exception& e) {
          throw DataError(learners::to_string(approach) + "/" + learners::to_string(alg) + "/" +
                          spec.name() + ": " + e.what());
        }
        const auto& win = points[outcome.best];
        auto model = learners::fit(win.config, train_m[win.matrix]);
        const auto& test = test_m[win.matrix];
        const auto pred = learners::predict_classes(model, test);
        ResultRecord rec;
        rec.approach = approach;
        rec.algorithm = learners::to_string(alg);
        rec.feature_spec = spec.name();
        rec.spatial = matrix_names[win.matrix];
        rec.hyperparams = win.config.hyperparams;
        rec.cv_score = outcome.scores[outcome.best];
        rec.metrics = metrics(test.targets, pred, k);
        fill_comparison(rec, ref, test.targets, pred);
        for (const auto& w : model.warnings)
          report.warnings.push_back(rec.algorithm + "/" + rec.feature_spec + ": " + w);
        if (rec.metrics.mae < best_mae) {
          best_mae = rec.metrics.mae;
          best_model = std::move(model);
          best_matrix = win.matrix;
        }
        report.records.push_back(std::move(rec));
      }
      if (best_model) {
        const auto imp = learners::feature_importance(*best_model, &test_m[best_matrix], plan.seed);
        ImportanceRecord ir;
        ir.approach = approach;
        ir.feature_spec = spec.name();
        ir.algorithm = learners::to_string(best_model->config.algorithm);
        ir.method = imp.method;
        ir.score = imp.score;
        report.importance.push_back(std::move(ir));
      }
    }
  }
  return report;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ";" : "") + format_double(v[i]);
  return out;
}

std::string join_params(const std::map<std::string, std::string>& hp) {
  std::string out;
  for (const auto& [k, v] : hp) out += (out.empty() ? "" : ";") + k + "=" + v;
  return out;
}

const std::vector<std::pair<std::string, std::string>>& importance_columns() {
  static const std::vector<std::pair<std::string, std::string>> cols{
      {"h", "h"}, {"tm", "m"}, {"dw", "dw"}, {"s", "s"}, {"wr", "wr"}, {"spt", "spt"}, {"ocy", "ocy"}};
  return cols;
}

Json metrics_json(const Metrics& m) {
  Json j;
  j["mae"] = m.mae;
  j["micro_f1"] = m.micro_f1;
  j["macro_f1"] = m.macro_f1;
  j["precision"] = m.precision;
  j["recall"] = m.recall;
  return j;
}

}  // namespace

void write_report(const ExperimentPlan& plan, const ExperimentReport& report,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json meta;
  meta["dataset_id"] = plan.dataset_id;
  meta["dataset_hash"] = report.dataset_hash;
  meta["seed"] = plan.seed;
  meta["scheme"] = {{"name", plan.scheme.name()},
                    {"boundaries", plan.scheme.boundaries()},
                    {"labels", plan.scheme.labels()}};
  meta["split_ratio"] = plan.split_ratio;
  meta["folds"] = plan.folds;
  meta["train_events"] = report.train_events;
  meta["test_events"] = report.test_events;
  Json approaches = Json::array();
  for (auto a : plan.approaches) approaches.push_back(learners::to_string(a));
  meta["approaches"] = approaches;
  meta["feature_specs"] = plan.feature_specs;
  Json grids = Json::object();
  std::set<Algorithm> algs(plan.classifiers.begin(), plan.classifiers.end());
  algs.insert(plan.regressors.begin(), plan.regressors.end());
  for (auto a : algs) {
    const auto it = plan.grids.find(a);
    grids[learners::to_string(a)] = it != plan.grids.end() ? it->second : default_grid(a);
  }
  meta["grids"] = grids;
  Json sg = Json::array();
  for (const auto& c : plan.spatial_grid.empty() ? default_spatial_grid(plan.seed) : plan.spatial_grid)
    sg.push_back(c.describe());
  meta["spatial_grid"] = sg;
  meta["macro_f1"] = "mean over classes present in y_true";
  meta["improvement"] = "MAE: (baseline - model) / baseline; F1: (model - baseline) / baseline; percent";

  Json records = Json::array();
  for (const auto& r : report.records) {
    Json j;
    j["approach"] = learners::to_string(r.approach);
    j["algorithm"] = r.algorithm;
    j["feature_spec"] = r.feature_spec;
    j["spatial"] = r.spatial;
    j["hyperparams"] = r.hyperparams;
    j["cv_score"] = r.cv_score;
    j["metrics"] = metrics_json(r.metrics);
    j["reference_baseline"] = r.reference_baseline;
    j["mae_improvement_pct"] = r.mae_improvement;
    j["micro_f1_improvement_pct"] = r.micro_f1_improvement;
    j["macro_f1_improvement_pct"] = r.macro_f1_improvement;
    if (r.ttest)
      j["ttest"] = {{"t", r.ttest->t}, {"df", r.ttest->df}, {"p", r.ttest->p},
                    {"significant", r.ttest->significant}, {"degenerate", r.ttest->degenerate}};
    if (r.r2) j["r2"] = *r.r2;
    records.push_back(std::move(j));
  }
  Json importance = Json::array();
  for (const auto& r : report.importance) {
    Json j;
    j["approach"] = learners::to_string(r.approach);
    j["feature_spec"] = r.feature_spec;
    j["algorithm"] = r.algorithm;
    j["method"] = r.method;
    j["score"] = r.score;
    importance.push_back(std::move(j));
  }
  Json root;
  root["format"] = "parkcharge-report";
  root["version"] = 1;
  root["metadata"] = std::move(meta);
  root["warnings"] = report.warnings;
  root["records"] = std::move(records);
  root["importance"] = std::move(importance);
  {
    std::ofstream out(dir / "report.json", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "report.json").string());
    out << root.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "report.csv", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "report.csv").string());
    out << "approach,algorithm,feature_spec,spatial,hyperparams,cv_score,mae,micro_f1,macro_f1,"
           "precision,recall,reference_baseline,mae_improvement_pct,micro_f1_improvement_pct,"
           "macro_f1_improvement_pct,p_value,significant,r2\n";
    for (const auto& r : report.records) {
      out << learners::to_string(r.approach) << ',' << csv_field(r.algorithm) << ','
          << csv_field(r.feature_spec) << ',' << csv_field(r.spatial) << ','
          << csv_field(join_params(r.hyperparams)) << ',' << format_double(r.cv_score) << ','
          << format_double(r.metrics.mae) << ',' << format_double(r.metrics.micro_f1) << ','
          << format_double(r.metrics.macro_f1) << ',' << join_doubles(r.metrics.precision) << ','
          << join_doubles(r.metrics.recall) << ',' << r.reference_baseline << ','
          << format_double(r.mae_improvement) << ',' << format_double(r.micro_f1_improvement) << ','
          << format_double(r.macro_f1_improvement) << ','
          << (r.ttest ? format_double(r.ttest->p) : "") << ','
          << (r.ttest ? (r.ttest->significant ? "1" : "0") : "") << ','
          << (r.r2 ? format_double(*r.r2) : "") << '\n';
    }
  }
  {
    std::ofstream out(dir / "importance.csv", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "importance.csv").string());
    out << "approach,feature_spec,algorithm,method";
    for (const auto& [col, group] : importance_columns()) out << ',' << col;
    out << '\n';
    for (const auto& r : report.importance) {
      out << learners::to_string(r.approach) << ',' << csv_field(r.feature_spec) << ','
          << r.algorithm << ',' << r.method;
      for (const auto& [col, group] : importance_columns()) {
        const auto it = r.score.find(group);
        out << ',' << (it != r.score.end() ? format_double(it->second) : "");
      }
      out << '\n';
    }
  }
}

std::string format_table(const ExperimentReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-15s %-26s %-14s %7s %7s %7s %9s %8s\n", "approach", "algorithm",
                "features", "MAE", "microF1", "macroF1", "dMAE%", "p");
  os << line;
  for (const auto& r : report.records) {
    std::snprintf(line, sizeof line, "%-15s %-26s %-14s %7.3f %7.3f %7.3f %+9.1f %8s\n",
                  learners::to_string(r.approach).c_str(), r.algorithm.c_str(),
                  r.feature_spec.c_str(), r.metrics.mae, r.metrics.micro_f1, r.metrics.macro_f1,
                  r.mae_improvement, r.ttest ? format_double(std::round(r.ttest->p * 1000) / 1000).c_str() : "-");
    os << line;
  }
  return os.str();
}

}  // namespace parkcharge::harness
