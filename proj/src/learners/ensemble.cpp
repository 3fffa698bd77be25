#include "parkcharge/learners/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "parkcharge/common.hpp"

namespace parkcharge::learners {

namespace {

void check_rows(const Matrix& x, std::size_t n) {
  if (x.rows() == 0) throw DataError("cannot fit on an empty matrix");
  if (x.rows() != n) throw std::invalid_argument("target length mismatch");
}

std::vector<double> sum_normalized(std::vector<double> v) {
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (total > 0)
    for (auto& e : v) e /= total;
  return v;
}

std::vector<DecisionTree> trees_from_json(const Json& arr) {
  std::vector<DecisionTree> out;
  for (const auto& t : arr) out.push_back(DecisionTree::from_json(t));
  return out;
}

Json trees_to_json(const std::vector<DecisionTree>& trees) {
  Json arr = Json::array();
  for (const auto& t : trees) arr.push_back(t.to_json());
  return arr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Random forest

namespace {

std::vector<double> bootstrap_weights(std::size_t n, bool bootstrap, Rng& rng) {
  std::vector<double> w(n, bootstrap ? 0.0 : 1.0);
  if (bootstrap)
    for (std::size_t i = 0; i < n; ++i) w[uniform_index(rng, n)] += 1.0;
  return w;
}

}  // namespace

RandomForest RandomForest::fit_classifier(const Matrix& x, std::span<const int> y, int num_classes,
                                          const ForestParams& params, std::uint64_t seed) {
  check_rows(x, y.size());
  if (params.n_trees < 1) throw UsageError("n_trees must be >= 1");
  RandomForest f;
  f.classifier_ = true;
  f.num_classes_ = num_classes;
  f.num_features_ = x.cols();
  const auto data = BinnedData::build(x);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(params.n_trees == 1 ? seed : mix_seed(seed, static_cast<std::uint64_t>(t)));
    const auto w = bootstrap_weights(x.rows(), params.bootstrap, rng);
    f.trees_.push_back(DecisionTree::fit_classifier(data, y, num_classes, w, params.tree, rng));
  }
  return f;
}

RandomForest RandomForest::fit_regressor(const Matrix& x, std::span<const double> y,
                                         const ForestParams& params, std::uint64_t seed) {
  check_rows(x, y.size());
  if (params.n_trees < 1) throw UsageError("n_trees must be >= 1");
  RandomForest f;
  f.classifier_ = false;
  f.num_features_ = x.cols();
  const auto data = BinnedData::build(x);
  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(params.n_trees == 1 ? seed : mix_seed(seed, static_cast<std::uint64_t>(t)));
    const auto w = bootstrap_weights(x.rows(), params.bootstrap, rng);
    f.trees_.push_back(DecisionTree::fit_regressor(data, y, w, params.tree, rng));
  }
  return f;
}

Matrix RandomForest::predict_proba(const Matrix& x) const {
  if (!classifier_) return Estimator::predict_proba(x);
  Matrix out(x.rows(), static_cast<std::size_t>(num_classes_));
  const double inv = 1.0 / static_cast<double>(trees_.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto dst = out.row(r);
    for (const auto& t : trees_) {
      const auto& v = t.leaf(x.row(r));
      for (std::size_t k = 0; k < v.size(); ++k) dst[k] += v[k];
    }
    for (auto& v : dst) v *= inv;
  }
  return out;
}

std::vector<double> RandomForest::predict_values(const Matrix& x) const {
  if (classifier_) return Estimator::predict_values(x);
  std::vector<double> out(x.rows(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (const auto& t : trees_) out[r] += t.leaf(x.row(r))[0];
    out[r] /= static_cast<double>(trees_.size());
  }
  return out;
}

std::optional<std::vector<double>> RandomForest::impurity_importance() const {
  std::vector<double> acc(num_features_, 0.0);
  for (const auto& t : trees_) {
    const auto imp = *t.impurity_importance();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += imp[i];
  }
  return sum_normalized(std::move(acc));
}

Json RandomForest::to_json() const {
  Json j;
  j["kind"] = kind();
  j["classifier"] = classifier_;
  j["num_classes"] = num_classes_;
  j["num_features"] = num_features_;
  j["trees"] = trees_to_json(trees_);
  return j;
}

RandomForest RandomForest::from_json(const Json& j) {
  RandomForest f;
  f.classifier_ = j.at("classifier").get<bool>();
  f.num_classes_ = j.at("num_classes").get<int>();
  f.num_features_ = j.at("num_features").get<std::size_t>();
  f.trees_ = trees_from_json(j.at("trees"));
  return f;
}

// ---------------------------------------------------------------------------
// Gradient boosting

namespace {

double softmax_loss(const std::vector<double>& scores, std::span<const int> y, std::size_t k) {
  double loss = 0;
  const std::size_t n = y.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double* s = &scores[i * k];
    const double mx = *std::max_element(s, s + k);
    double z = 0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(s[c] - mx);
    loss += std::log(z) + mx - s[static_cast<std::size_t>(y[i])];
  }
  return loss / static_cast<double>(n);
}

double squared_loss(const std::vector<double>& pred, std::span<const double> y) {
  double loss = 0;
  for (std::size_t i = 0; i < y.size(); ++i) loss += (y[i] - pred[i]) * (y[i] - pred[i]);
  return loss / static_cast<double>(y.size());
}

constexpr int kMaxHalvings = 30;

}  // namespace

GradientBoost GradientBoost::fit_classifier(const Matrix& x, std::span<const int> y,
                                            int num_classes, const BoostParams& params,
                                            std::uint64_t seed) {
  check_rows(x, y.size());
  if (params.n_trees < 1) throw UsageError("n_trees must be >= 1");
  GradientBoost g;
  g.classifier_ = true;
  g.num_classes_ = num_classes;
  g.num_features_ = x.cols();
  const auto k = static_cast<std::size_t>(num_classes);
  const std::size_t n = x.rows();

  std::vector<double> prior(k, 0.0);
  for (int v : y) prior[static_cast<std::size_t>(v)] += 1.0;
  for (auto& p : prior) p = std::log(std::max(p / static_cast<double>(n), 1e-12));
  g.init_ = prior;

  std::vector<double> scores(n * k);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(prior.begin(), prior.end(), scores.begin() + static_cast<std::ptrdiff_t>(i * k));
  double loss = softmax_loss(scores, y, k);
  g.loss_history_.push_back(loss);

  const auto data = BinnedData::build(x);
  const std::vector<double> ones(n, 1.0);
  const TreeParams tp{params.max_depth, 0, 2};
  std::vector<double> prob(n * k), resid(n), update(n * k), trial(n * k);
  const double factor = static_cast<double>(k - 1) / static_cast<double>(k);

  for (int m = 0; m < params.n_trees; ++m) {
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(scores.begin() + static_cast<std::ptrdiff_t>(i * k), k,
                  prob.begin() + static_cast<std::ptrdiff_t>(i * k));
      softmax(std::span<double>(prob.data() + i * k, k));
    }
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
    std::vector<DecisionTree> stage;
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i)
        resid[i] = (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0) - prob[i * k + c];
      const LeafValueFn newton = [&](std::span<const std::size_t> rows) {
        double num = 0, den = 0;
        for (auto r : rows) {
          num += resid[r];
          const double a = std::abs(resid[r]);
          den += a * (1.0 - a);
        }
        return den < 1e-150 ? 0.0 : factor * num / den;
      };
      auto tree = DecisionTree::fit_regressor(data, resid, ones, tp, rng, newton);
      for (std::size_t i = 0; i < n; ++i) update[i * k + c] = tree.leaf(x.row(i))[0];
      stage.push_back(std::move(tree));
    }
    double scale = params.learning_rate;
    double new_loss = loss;
    int halvings = 0;
    while (true) {
      for (std::size_t i = 0; i < n * k; ++i) trial[i] = scores[i] + scale * update[i];
      new_loss = softmax_loss(trial, y, k);
      if (new_loss <= loss) break;
      if (++halvings > kMaxHalvings) {
        scale = 0.0;
        trial = scores;
        new_loss = loss;
        break;
      }
      scale *= 0.5;
    }
    scores.swap(trial);
    loss = new_loss;
    g.loss_history_.push_back(loss);
    g.stages_.push_back(std::move(stage));
    g.stage_scale_.push_back(scale);
  }
  return g;
}

GradientBoost GradientBoost::fit_regressor(const Matrix& x, std::span<const double> y,
                                           const BoostParams& params, std::uint64_t seed) {
  check_rows(x, y.size());
  if (params.n_trees < 1) throw UsageError("n_trees must be >= 1");
  GradientBoost g;
  g.classifier_ = false;
  g.num_features_ = x.cols();
  const std::size_t n = x.rows();
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  g.init_ = {mean};
  std::vector<double> pred(n, mean), resid(n), update(n), trial(n);
  double loss = squared_loss(pred, y);
  g.loss_history_.push_back(loss);

  const auto data = BinnedData::build(x);
  const std::vector<double> ones(n, 1.0);
  const TreeParams tp{params.max_depth, 0, 2};
  for (int m = 0; m < params.n_trees; ++m) {
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - pred[i];
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
    auto tree = DecisionTree::fit_regressor(data, resid, ones, tp, rng);
    for (std::size_t i = 0; i < n; ++i) update[i] = tree.leaf(x.row(i))[0];
    double scale = params.learning_rate;
    double new_loss = loss;
    int halvings = 0;
    while (true) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = pred[i] + scale * update[i];
      new_loss = squared_loss(trial, y);
      if (new_loss <= loss) break;
      if (++halvings > kMaxHalvings) {
        scale = 0.0;
        trial = pred;
        new_loss = loss;
        break;
      }
      scale *= 0.5;
    }
    pred.swap(trial);
    loss = new_loss;
    g.loss_history_.push_back(loss);
    std::vector<DecisionTree> stage;
    stage.push_back(std::move(tree));
    g.stages_.push_back(std::move(stage));
    g.stage_scale_.push_back(scale);
  }
  return g;
}

std::vector<double> GradientBoost::raw_scores(std::span<const double> row) const {
  std::vector<double> s = init_;
  for (std::size_t m = 0; m < stages_.size(); ++m)
    for (std::size_t c = 0; c < stages_[m].size(); ++c)
      s[c] += stage_scale_[m] * stages_[m][c].leaf(row)[0];
  return s;
}

Matrix GradientBoost::predict_proba(const Matrix& x) const {
  if (!classifier_) return Estimator::predict_proba(x);
  Matrix out(x.rows(), static_cast<std::size_t>(num_classes_));
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto s = raw_scores(x.row(r));
    softmax(s);
    std::copy(s.begin(), s.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> GradientBoost::predict_values(const Matrix& x) const {
  if (classifier_) return Estimator::predict_values(x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = raw_scores(x.row(r))[0];
  return out;
}

std::optional<std::vector<double>> GradientBoost::impurity_importance() const {
  std::vector<double> acc(num_features_, 0.0);
  for (const auto& stage : stages_)
    for (const auto& t : stage)
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += t.raw_importance()[i];
  return sum_normalized(std::move(acc));
}

Json GradientBoost::to_json() const {
  Json j;
  j["kind"] = kind();
  j["classifier"] = classifier_;
  j["num_classes"] = num_classes_;
  j["num_features"] = num_features_;
  j["init"] = init_;
  j["stage_scale"] = stage_scale_;
  j["loss_history"] = loss_history_;
  Json stages = Json::array();
  for (const auto& s : stages_) stages.push_back(trees_to_json(s));
  j["stages"] = std::move(stages);
  return j;
}

GradientBoost GradientBoost::from_json(const Json& j) {
  GradientBoost g;
  g.classifier_ = j.at("classifier").get<bool>();
  g.num_classes_ = j.at("num_classes").get<int>();
  g.num_features_ = j.at("num_features").get<std::size_t>();
  g.init_ = j.at("init").get<std::vector<double>>();
  g.stage_scale_ = j.at("stage_scale").get<std::vector<double>>();
  g.loss_history_ = j.at("loss_history").get<std::vector<double>>();
  for (const auto& s : j.at("stages")) g.stages_.push_back(trees_from_json(s));
  return g;
}

// ---------------------------------------------------------------------------
// AdaBoost

AdaBoost AdaBoost::fit_classifier(const Matrix& x, std::span<const int> y, int num_classes,
                                  const BoostParams& params, std::uint64_t seed) {
  check_rows(x, y.size());
  if (params.n_trees < 1) throw UsageError("n_trees must be >= 1");
  AdaBoost a;
  a.classifier_ = true;
  a.num_classes_ = num_classes;
  a.num_features_ = x.cols();
  const std::size_t n = x.rows();
  const auto k = static_cast<double>(num_classes);
  const auto data = BinnedData::build(x);
  const TreeParams tp{params.max_depth, 0, 2};
  std::vector<double> w(n, 1.0 / static_cast<double>(n));

  for (int m = 0; m < params.n_trees; ++m) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
    auto tree = DecisionTree::fit_classifier(data, y, num_classes, w, tp, rng);
    std::vector<bool> miss(n);
    double err = 0;
    for (std::size_t i = 0; i < n; ++i) {
      miss[i] = static_cast<int>(argmax(tree.leaf(x.row(i)))) != y[i];
      if (miss[i]) err += w[i];
    }
    if (err <= 0) {
      // Perfect fit: keep it and stop.
      a.trees_.push_back(std::move(tree));
      a.alphas_.push_back(1.0);
      break;
    }
    if (err >= 1.0 - 1.0 / k) {
      if (a.trees_.empty()) {
        a.trees_.push_back(std::move(tree));
        a.alphas_.push_back(1.0);
      }
      break;
    }
    const double alpha = params.learning_rate * (std::log((1.0 - err) / err) + std::log(k - 1.0));
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i] && w[i] > 0) w[i] *= std::exp(alpha);
      total += w[i];
    }
    for (auto& v : w) v /= total;
    a.trees_.push_back(std::move(tree));
    a.alphas_.push_back(alpha);
  }
  return a;
}

AdaBoost AdaBoost::fit_regressor(const Matrix& x, std::span<const double> y,
                                 const BoostParams& params, std::uint64_t seed) {
  check_rows(x, y.size());
  if (params.n_trees < 1) throw UsageError("n_trees must be >= 1");
  AdaBoost a;
  a.classifier_ = false;
  a.num_features_ = x.cols();
  const std::size_t n = x.rows();
  const auto data = BinnedData::build(x);
  const TreeParams tp{params.max_depth, 0, 2};
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  std::vector<double> err(n);

  for (int m = 0; m < params.n_trees; ++m) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(m)));
    auto tree = DecisionTree::fit_regressor(data, y, w, tp, rng);
    double max_err = 0;
    for (std::size_t i = 0; i < n; ++i) {
      err[i] = std::abs(tree.leaf(x.row(i))[0] - y[i]);
      max_err = std::max(max_err, err[i]);
    }
    if (max_err <= 0) {
      a.trees_.push_back(std::move(tree));
      a.alphas_.push_back(1.0);
      break;
    }
    double avg = 0;
    for (std::size_t i = 0; i < n; ++i) avg += w[i] * err[i] / max_err;
    if (avg >= 0.5) {
      if (a.trees_.empty()) {
        a.trees_.push_back(std::move(tree));
        a.alphas_.push_back(1.0);
      }
      break;
    }
    if (avg <= 0) {
      a.trees_.push_back(std::move(tree));
      a.alphas_.push_back(1.0);
      break;
    }
    const double beta = avg / (1.0 - avg);
    const double alpha = params.learning_rate * std::log(1.0 / beta);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] *= std::pow(beta, (1.0 - err[i] / max_err) * params.learning_rate);
      total += w[i];
    }
    for (auto& v : w) v /= total;
    a.trees_.push_back(std::move(tree));
    a.alphas_.push_back(alpha);
  }
  return a;
}

Matrix AdaBoost::predict_proba(const Matrix& x) const {
  if (!classifier_) return Estimator::predict_proba(x);
  const auto k = static_cast<std::size_t>(num_classes_);
  Matrix out(x.rows(), k);
  const double total = std::accumulate(alphas_.begin(), alphas_.end(), 0.0);
  const double denom = k > 1 ? static_cast<double>(k - 1) : 1.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    std::vector<double> d(k, 0.0);
    for (std::size_t m = 0; m < trees_.size(); ++m)
      d[argmax(trees_[m].leaf(x.row(r)))] += alphas_[m];
    for (auto& v : d) v = v / total / denom;
    softmax(d);
    std::copy(d.begin(), d.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> AdaBoost::predict_values(const Matrix& x) const {
  if (classifier_) return Estimator::predict_values(x);
  std::vector<double> out(x.rows());
  const double total = std::accumulate(alphas_.begin(), alphas_.end(), 0.0);
  std::vector<std::pair<double, double>> preds(trees_.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t m = 0; m < trees_.size(); ++m) preds[m] = {trees_[m].leaf(x.row(r))[0], alphas_[m]};
    std::sort(preds.begin(), preds.end());
    double cum = 0;
    out[r] = preds.back().first;
    for (const auto& [v, a] : preds) {
      cum += a;
      if (cum >= 0.5 * total) {
        out[r] = v;
        break;
      }
    }
  }
  return out;
}

std::optional<std::vector<double>> AdaBoost::impurity_importance() const {
  std::vector<double> acc(num_features_, 0.0);
  for (std::size_t m = 0; m < trees_.size(); ++m) {
    const auto imp = *trees_[m].impurity_importance();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += alphas_[m] * imp[i];
  }
  return sum_normalized(std::move(acc));
}

Json AdaBoost::to_json() const {
  Json j;
  j["kind"] = kind();
  j["classifier"] = classifier_;
  j["num_classes"] = num_classes_;
  j["num_features"] = num_features_;
  j["alphas"] = alphas_;
  j["trees"] = trees_to_json(trees_);
  return j;
}

AdaBoost AdaBoost::from_json(const Json& j) {
  AdaBoost a;
  a.classifier_ = j.at("classifier").get<bool>();
  a.num_classes_ = j.at("num_classes").get<int>();
  a.num_features_ = j.at("num_features").get<std::size_t>();
  a.alphas_ = j.at("alphas").get<std::vector<double>>();
  a.trees_ = trees_from_json(j.at("trees"));
  return a;
}

}  // namespace parkcharge::learners
