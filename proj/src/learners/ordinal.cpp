#include "parkcharge/learners/ordinal.hpp"

#include <algorithm>

#include "parkcharge/common.hpp"

namespace parkcharge::learners {

std::vector<double> ordinal_probabilities(std::span<const double> exceed) {
  const std::size_t k = exceed.size() + 1;
  std::vector<double> p(k);
  p[0] = 1.0 - exceed[0];
  for (std::size_t c = 1; c + 1 < k; ++c) p[c] = exceed[c - 1] - exceed[c];
  p[k - 1] = exceed[k - 2];
  double sum = 0;
  for (auto& v : p) {
    v = std::max(0.0, v);
    sum += v;
  }
  if (sum <= 0) {
    std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(k));
    return p;
  }
  for (auto& v : p) v /= sum;
  return p;
}

OrdinalEstimator::OrdinalEstimator(int num_classes, std::vector<Threshold> thresholds)
    : num_classes_(num_classes), thresholds_(std::move(thresholds)) {
  if (num_classes < 2) throw UsageError("ordinal model needs at least two classes");
  if (thresholds_.size() != static_cast<std::size_t>(num_classes - 1))
    throw std::invalid_argument("ordinal model needs K-1 thresholds");
  for (const auto& t : thresholds_)
    if (t.model && !t.model->probabilistic())
      throw UsageError("ordinal thresholds need a probabilistic base model, got " +
                       t.model->kind());
}

Matrix OrdinalEstimator::predict_proba(const Matrix& x) const {
  const std::size_t k = static_cast<std::size_t>(num_classes_);
  std::vector<std::vector<double>> exceed(thresholds_.size());
  for (std::size_t t = 0; t < thresholds_.size(); ++t) {
    auto& col = exceed[t];
    if (!thresholds_[t].model) {
      col.assign(x.rows(), thresholds_[t].constant);
      continue;
    }
    const Matrix p = thresholds_[t].model->predict_proba(x);
    col.resize(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) col[r] = p(r, 1);
  }
  Matrix out(x.rows(), k);
  std::vector<double> e(thresholds_.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t t = 0; t < e.size(); ++t) e[t] = exceed[t][r];
    const auto p = ordinal_probabilities(e);
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  return out;
}

std::optional<std::vector<double>> OrdinalEstimator::impurity_importance() const {
  std::optional<std::vector<double>> total;
  for (const auto& t : thresholds_) {
    if (!t.model) continue;
    auto imp = t.model->impurity_importance();
    if (!imp) return std::nullopt;
    if (!total) total = std::vector<double>(imp->size(), 0.0);
    for (std::size_t i = 0; i < imp->size(); ++i) (*total)[i] += (*imp)[i];
  }
  if (!total) return std::nullopt;
  double sum = 0;
  for (double v : *total) sum += v;
  if (sum > 0)
    for (auto& v : *total) v /= sum;
  return total;
}

Json OrdinalEstimator::to_json() const {
  Json j;
  j["kind"] = kind();
  j["num_classes"] = num_classes_;
  Json arr = Json::array();
  for (const auto& t : thresholds_) {
    Json e;
    if (t.model)
      e["model"] = t.model->to_json();
    else
      e["constant"] = t.constant;
    arr.push_back(std::move(e));
  }
  j["thresholds"] = std::move(arr);
  return j;
}

OrdinalEstimator OrdinalEstimator::from_json(const Json& j) {
  std::vector<Threshold> ts;
  for (const auto& e : j.at("thresholds")) {
    Threshold t;
    if (e.contains("model"))
      t.model = estimator_from_json(e.at("model"));
    else
      t.constant = e.at("constant").get<double>();
    ts.push_back(std::move(t));
  }
  return OrdinalEstimator(j.at("num_classes").get<int>(), std::move(ts));
}

}  // namespace parkcharge::learners
