#include "parkcharge/learners/tree.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "parkcharge/common.hpp"

namespace parkcharge::learners {

BinnedData BinnedData::build(const Matrix& x, std::size_t max_bins) {
  if (max_bins < 2 || max_bins > 65536) throw UsageError("max_bins must be in [2, 65536]");
  BinnedData d;
  d.rows_ = x.rows();
  d.cols_ = x.cols();
  d.bins_.resize(d.rows_ * d.cols_);
  d.thresholds_.resize(d.cols_);
  std::vector<double> col(d.rows_);
  for (std::size_t c = 0; c < d.cols_; ++c) {
    for (std::size_t r = 0; r < d.rows_; ++r) col[r] = x(r, c);
    std::vector<double> uniq = col;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    auto& th = d.thresholds_[c];
    if (uniq.size() <= max_bins) {
      for (std::size_t i = 0; i + 1 < uniq.size(); ++i) th.push_back(0.5 * (uniq[i] + uniq[i + 1]));
    } else {
      for (std::size_t j = 1; j < max_bins; ++j) {
        const std::size_t idx = j * uniq.size() / max_bins;
        const double t = 0.5 * (uniq[idx - 1] + uniq[idx]);
        if (th.empty() || t > th.back()) th.push_back(t);
      }
    }
    for (std::size_t r = 0; r < d.rows_; ++r)
      d.bins_[c * d.rows_ + r] = static_cast<std::uint16_t>(
          std::lower_bound(th.begin(), th.end(), col[r]) - th.begin());
  }
  return d;
}

class TreeBuilder {
public:
  TreeBuilder(const BinnedData& data, std::span<const double> weights, const TreeParams& params,
              Rng& rng)
      : data_(data), w_(weights), params_(params), rng_(rng) {
    if (weights.size() != data.rows()) throw std::invalid_argument("weight length mismatch");
    features_.resize(data.cols());
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  DecisionTree classify(std::span<const int> y, int k) {
    yc_ = y;
    k_ = k;
    tree_.classifier_ = true;
    tree_.num_classes_ = k;
    return run();
  }

  DecisionTree regress(std::span<const double> y, const LeafValueFn& leaf) {
    yr_ = y;
    leaf_fn_ = leaf;
    tree_.classifier_ = false;
    tree_.num_classes_ = 1;
    return run();
  }

private:
  struct Split {
    int feature = -1;
    std::size_t bin = 0;
    double gain = -1.0;
  };

  DecisionTree run() {
    tree_.importance_.assign(data_.cols(), 0.0);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < data_.rows(); ++r)
      if (w_[r] > 0) rows.push_back(r);
    if (rows.empty()) throw DataError("cannot fit a tree without positively weighted rows");
    total_weight_ = 0;
    for (auto r : rows) total_weight_ += w_[r];
    grow(rows, 0);
    return std::move(tree_);
  }

  bool pure(std::span<const std::size_t> rows) const {
    if (tree_.classifier_) {
      const int first = yc_[rows[0]];
      return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return yc_[r] == first; });
    }
    const double first = yr_[rows[0]];
    return std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return yr_[r] == first; });
  }

  std::vector<double> leaf_value(std::span<const std::size_t> rows) const {
    if (tree_.classifier_) {
      std::vector<double> dist(static_cast<std::size_t>(k_), 0.0);
      double total = 0;
      for (auto r : rows) {
        dist[static_cast<std::size_t>(yc_[r])] += w_[r];
        total += w_[r];
      }
      for (auto& v : dist) v /= total;
      return dist;
    }
    if (leaf_fn_) return {leaf_fn_(rows)};
    double s = 0;
    double wsum = 0;
    for (auto r : rows) {
      s += w_[r] * yr_[r];
      wsum += w_[r];
    }
    return {s / wsum};
  }

  // Best split of one feature; gain is the weighted impurity decrease.
  Split best_for_feature(std::span<const std::size_t> rows, std::size_t f, bool& constant) {
    const std::size_t nb = data_.num_bins(f);
    constant = true;
    if (nb < 2) return {};
    count_.assign(nb, 0);
    if (tree_.classifier_) {
      const auto k = static_cast<std::size_t>(k_);
      hist_.assign(nb * k, 0.0);
      for (auto r : rows) {
        const auto b = data_.bin(r, f);
        hist_[b * k + static_cast<std::size_t>(yc_[r])] += w_[r];
        ++count_[b];
      }
    } else {
      hist_.assign(nb * 2, 0.0);
      for (auto r : rows) {
        const auto b = data_.bin(r, f);
        hist_[b * 2] += w_[r];
        hist_[b * 2 + 1] += w_[r] * yr_[r];
        ++count_[b];
      }
    }
    const std::size_t occupied =
        static_cast<std::size_t>(std::count_if(count_.begin(), count_.end(), [](auto c) { return c > 0; }));
    if (occupied < 2) return {};
    constant = false;

    Split best;
    best.feature = static_cast<int>(f);
    const std::size_t n = rows.size();
    std::size_t left_n = 0;
    if (tree_.classifier_) {
      const auto k = static_cast<std::size_t>(k_);
      std::vector<double> tot(k, 0.0), left(k, 0.0);
      for (std::size_t b = 0; b < nb; ++b)
        for (std::size_t c = 0; c < k; ++c) tot[c] += hist_[b * k + c];
      double wt = 0, sq = 0;
      for (double v : tot) {
        wt += v;
        sq += v * v;
      }
      const double parent = wt - sq / wt;
      double wl = 0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        left_n += count_[b];
        for (std::size_t c = 0; c < k; ++c) {
          left[c] += hist_[b * k + c];
          wl += hist_[b * k + c];
        }
        if (count_[b] == 0 || left_n == 0 || left_n == n) continue;
        const double wr = wt - wl;
        if (wl <= 0 || wr <= 0) continue;
        double sql = 0, sqr = 0;
        for (std::size_t c = 0; c < k; ++c) {
          sql += left[c] * left[c];
          const double rc = tot[c] - left[c];
          sqr += rc * rc;
        }
        const double gain = parent - (wl - sql / wl) - (wr - sqr / wr);
        if (gain > best.gain) {
          best.gain = gain;
          best.bin = b;
        }
      }
    } else {
      double wt = 0, st = 0;
      for (std::size_t b = 0; b < nb; ++b) {
        wt += hist_[b * 2];
        st += hist_[b * 2 + 1];
      }
      const double parent = st * st / wt;
      double wl = 0, sl = 0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        left_n += count_[b];
        wl += hist_[b * 2];
        sl += hist_[b * 2 + 1];
        if (count_[b] == 0 || left_n == 0 || left_n == n) continue;
        const double wr = wt - wl;
        if (wl <= 0 || wr <= 0) continue;
        const double sr = st - sl;
        const double gain = sl * sl / wl + sr * sr / wr - parent;
        if (gain > best.gain) {
          best.gain = gain;
          best.bin = b;
        }
      }
    }
    if (best.gain < 0) return {};
    return best;
  }

  int grow(std::vector<std::size_t>& rows, int depth) {
    const int id = static_cast<int>(tree_.nodes_.size());
    tree_.nodes_.push_back({});
    tree_.nodes_[static_cast<std::size_t>(id)].value = leaf_value(rows);

    const bool depth_done = params_.max_depth > 0 && depth >= params_.max_depth;
    if (depth_done || rows.size() < static_cast<std::size_t>(params_.min_samples_split) ||
        pure(rows))
      return id;

    const std::size_t f_total = data_.cols();
    const std::size_t want = params_.max_features > 0
                                 ? std::min<std::size_t>(static_cast<std::size_t>(params_.max_features), f_total)
                                 : f_total;
    if (want < f_total) shuffle(std::span<std::size_t>(features_), rng_);
    else std::iota(features_.begin(), features_.end(), std::size_t{0});

    Split best;
    std::size_t tried = 0;
    for (std::size_t i = 0; i < f_total && tried < want; ++i) {
      const std::size_t f = features_[i];
      bool constant = false;
      const Split s = best_for_feature(rows, f, constant);
      if (constant) continue;
      ++tried;
      if (s.feature < 0) continue;
      // Equal gains prefer the lower column so the result does not depend on visiting order.
      if (s.gain > best.gain || (s.gain == best.gain && s.feature < best.feature)) best = s;
    }
    if (best.feature < 0) return id;

    const auto f = static_cast<std::size_t>(best.feature);
    double node_w = 0;
    for (auto r : rows) node_w += w_[r];
    tree_.importance_[f] += std::max(0.0, best.gain);

    auto mid = std::stable_partition(rows.begin(), rows.end(),
                                     [&](std::size_t r) { return data_.bin(r, f) <= best.bin; });
    std::vector<std::size_t> left(rows.begin(), mid);
    std::vector<std::size_t> right(mid, rows.end());
    rows.clear();
    rows.shrink_to_fit();

    tree_.nodes_[static_cast<std::size_t>(id)].feature = best.feature;
    tree_.nodes_[static_cast<std::size_t>(id)].threshold = data_.threshold(f, best.bin);
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    tree_.nodes_[static_cast<std::size_t>(id)].left = l;
    tree_.nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  const BinnedData& data_;
  std::span<const double> w_;
  TreeParams params_;
  Rng& rng_;
  std::span<const int> yc_;
  std::span<const double> yr_;
  int k_ = 1;
  LeafValueFn leaf_fn_;
  double total_weight_ = 0;
  std::vector<std::size_t> features_;
  std::vector<double> hist_;
  std::vector<std::size_t> count_;
  DecisionTree tree_;
};

DecisionTree DecisionTree::fit_classifier(const BinnedData& data, std::span<const int> y,
                                          int num_classes, std::span<const double> weights,
                                          const TreeParams& params, Rng& rng) {
  if (y.size() != data.rows()) throw std::invalid_argument("target length mismatch");
  if (num_classes < 1) throw UsageError("num_classes must be positive");
  for (int v : y)
    if (v < 0 || v >= num_classes) throw DataError("class label outside [0, K)");
  return TreeBuilder(data, weights, params, rng).classify(y, num_classes);
}

DecisionTree DecisionTree::fit_regressor(const BinnedData& data, std::span<const double> y,
                                         std::span<const double> weights, const TreeParams& params,
                                         Rng& rng, const LeafValueFn& leaf_value) {
  if (y.size() != data.rows()) throw std::invalid_argument("target length mismatch");
  return TreeBuilder(data, weights, params, rng).regress(y, leaf_value);
}

const std::vector<double>& DecisionTree::leaf(std::span<const double> row) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                        : n.right);
  }
  return nodes_[i].value;
}

Matrix DecisionTree::predict_proba(const Matrix& x) const {
  if (!classifier_) return Estimator::predict_proba(x);
  Matrix out(x.rows(), static_cast<std::size_t>(num_classes_));
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto& v = leaf(x.row(r));
    std::copy(v.begin(), v.end(), out.row(r).begin());
  }
  return out;
}

std::vector<double> DecisionTree::predict_values(const Matrix& x) const {
  if (classifier_) return Estimator::predict_values(x);
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = leaf(x.row(r))[0];
  return out;
}

std::optional<std::vector<double>> DecisionTree::impurity_importance() const {
  std::vector<double> out = importance_;
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  if (total > 0)
    for (auto& v : out) v /= total;
  return out;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

Json DecisionTree::to_json() const {
  Json j;
  j["kind"] = kind();
  j["classifier"] = classifier_;
  j["num_classes"] = num_classes_;
  j["importance"] = importance_;
  Json nodes = Json::array();
  for (const auto& n : nodes_) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  j["nodes"] = std::move(nodes);
  return j;
}

DecisionTree DecisionTree::from_json(const Json& j) {
  DecisionTree t;
  t.classifier_ = j.at("classifier").get<bool>();
  t.num_classes_ = j.at("num_classes").get<int>();
  t.importance_ = j.at("importance").get<std::vector<double>>();
  for (const auto& n : j.at("nodes")) {
    Node node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<int>();
    node.right = n.at(3).get<int>();
    node.value = n.at(4).get<std::vector<double>>();
    t.nodes_.push_back(std::move(node));
  }
  return t;
}

}  // namespace parkcharge::learners
