#include "parkcharge/learners/naive_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "parkcharge/common.hpp"

namespace parkcharge::learners {

namespace {

void check_input(const Matrix& x, std::span<const int> y, int num_classes) {
  if (x.rows() == 0) throw DataError("cannot fit on an empty matrix");
  if (y.size() != x.rows()) throw std::invalid_argument("label length mismatch");
  for (int v : y)
    if (v < 0 || v >= num_classes) throw std::invalid_argument("label out of range");
}

// Rows of log-joint scores to probabilities; classes with -inf stay at zero.
void normalize_log(std::span<double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  if (!std::isfinite(mx)) {
    std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(row.size()));
    return;
  }
  double sum = 0;
  for (auto& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : row) v /= sum;
}

}  // namespace

GaussianNB GaussianNB::fit(const Matrix& x, std::span<const int> y, int num_classes,
                           double var_smoothing) {
  check_input(x, y, num_classes);
  GaussianNB m;
  const auto k = static_cast<std::size_t>(num_classes);
  const std::size_t f = x.cols();
  m.num_classes_ = num_classes;
  m.features_ = f;
  m.prior_.assign(k, 0.0);
  m.theta_.assign(k * f, 0.0);
  m.var_.assign(k * f, 0.0);
  std::vector<double> count(k, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto c = static_cast<std::size_t>(y[r]);
    count[c] += 1;
    for (std::size_t j = 0; j < f; ++j) m.theta_[c * f + j] += x(r, j);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < f; ++j)
      if (count[c] > 0) m.theta_[c * f + j] /= count[c];
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto c = static_cast<std::size_t>(y[r]);
    for (std::size_t j = 0; j < f; ++j) {
      const double d = x(r, j) - m.theta_[c * f + j];
      m.var_[c * f + j] += d * d;
    }
  }
  double max_var = 0;
  for (std::size_t j = 0; j < f; ++j) {
    double s = 0, s2 = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, j);
    const double mean = s / static_cast<double>(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) s2 += (x(r, j) - mean) * (x(r, j) - mean);
    max_var = std::max(max_var, s2 / static_cast<double>(x.rows()));
  }
  double eps = var_smoothing * max_var;
  if (eps <= 0) eps = var_smoothing > 0 ? var_smoothing : 1e-300;
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < f; ++j)
      m.var_[c * f + j] = (count[c] > 0 ? m.var_[c * f + j] / count[c] : 0.0) + eps;
  for (std::size_t c = 0; c < k; ++c) m.prior_[c] = count[c] / static_cast<double>(x.rows());
  return m;
}

Matrix GaussianNB::predict_proba(const Matrix& x) const {
  const auto k = static_cast<std::size_t>(num_classes_);
  const std::size_t f = features_;
  if (x.cols() != f) throw std::invalid_argument("feature count mismatch");
  Matrix out(x.rows(), k);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto dst = out.row(r);
    for (std::size_t c = 0; c < k; ++c) {
      if (prior_[c] <= 0) {
        dst[c] = -std::numeric_limits<double>::infinity();
        continue;
      }
      double s = std::log(prior_[c]);
      for (std::size_t j = 0; j < f; ++j) {
        const double v = var_[c * f + j];
        const double d = x(r, j) - theta_[c * f + j];
        s -= 0.5 * std::log(2 * std::numbers::pi * v) + d * d / (2 * v);
      }
      dst[c] = s;
    }
    normalize_log(dst);
  }
  return out;
}

Json GaussianNB::to_json() const {
  Json j;
  j["kind"] = kind();
  j["num_classes"] = num_classes_;
  j["features"] = features_;
  j["prior"] = prior_;
  j["theta"] = theta_;
  j["var"] = var_;
  return j;
}

GaussianNB GaussianNB::from_json(const Json& j) {
  GaussianNB m;
  m.num_classes_ = j.at("num_classes").get<int>();
  m.features_ = j.at("features").get<std::size_t>();
  m.prior_ = j.at("prior").get<std::vector<double>>();
  m.theta_ = j.at("theta").get<std::vector<double>>();
  m.var_ = j.at("var").get<std::vector<double>>();
  return m;
}

MultinomialNB MultinomialNB::fit(const Matrix& x, std::span<const int> y, int num_classes,
                                 double alpha) {
  check_input(x, y, num_classes);
  MultinomialNB m;
  const auto k = static_cast<std::size_t>(num_classes);
  const std::size_t f = x.cols();
  m.num_classes_ = num_classes;
  m.features_ = f;
  m.shift_.assign(f, 0.0);
  for (std::size_t j = 0; j < f; ++j) {
    double mn = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) mn = std::min(mn, x(r, j));
    m.shift_[j] = -mn;
  }
  std::vector<double> count(k, 0.0), fc(k * f, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto c = static_cast<std::size_t>(y[r]);
    count[c] += 1;
    for (std::size_t j = 0; j < f; ++j) fc[c * f + j] += x(r, j) + m.shift_[j];
  }
  m.log_prior_.resize(k);
  m.log_prob_.resize(k * f);
  for (std::size_t c = 0; c < k; ++c) {
    m.log_prior_[c] = count[c] > 0 ? std::log(count[c] / static_cast<double>(x.rows()))
                                   : -std::numeric_limits<double>::infinity();
    double total = 0;
    for (std::size_t j = 0; j < f; ++j) total += fc[c * f + j] + alpha;
    for (std::size_t j = 0; j < f; ++j)
      m.log_prob_[c * f + j] = total > 0 ? std::log((fc[c * f + j] + alpha) / total) : 0.0;
  }
  return m;
}

Matrix MultinomialNB::predict_proba(const Matrix& x) const {
  const auto k = static_cast<std::size_t>(num_classes_);
  const std::size_t f = features_;
  if (x.cols() != f) throw std::invalid_argument("feature count mismatch");
  Matrix out(x.rows(), k);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto dst = out.row(r);
    for (std::size_t c = 0; c < k; ++c) {
      double s = log_prior_[c];
      if (std::isfinite(s))
        for (std::size_t j = 0; j < f; ++j)
          s += std::max(0.0, x(r, j) + shift_[j]) * log_prob_[c * f + j];
      dst[c] = s;
    }
    normalize_log(dst);
  }
  return out;
}

Json MultinomialNB::to_json() const {
  Json j;
  j["kind"] = kind();
  j["num_classes"] = num_classes_;
  j["features"] = features_;
  j["shift"] = shift_;
  std::vector<double> lp = log_prior_;
  for (auto& v : lp)
    if (!std::isfinite(v)) v = -1e308;
  j["log_prior"] = lp;
  j["log_prob"] = log_prob_;
  return j;
}

MultinomialNB MultinomialNB::from_json(const Json& j) {
  MultinomialNB m;
  m.num_classes_ = j.at("num_classes").get<int>();
  m.features_ = j.at("features").get<std::size_t>();
  m.shift_ = j.at("shift").get<std::vector<double>>();
  m.log_prior_ = j.at("log_prior").get<std::vector<double>>();
  for (auto& v : m.log_prior_)
    if (v <= -1e308) v = -std::numeric_limits<double>::infinity();
  m.log_prob_ = j.at("log_prob").get<std::vector<double>>();
  return m;
}

}  // namespace parkcharge::learners
