#include "parkcharge/learners/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "parkcharge/common.hpp"

namespace parkcharge::learners {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

LogisticObjective::LogisticObjective(const Matrix& x, std::span<const int> y,
                                     std::span<const double> sample_weights,
                                     std::size_t num_outputs, double l2)
    : x_(x), y_(y), c_(sample_weights), outputs_(num_outputs), l2_(l2) {
  if (y.size() != x.rows() || sample_weights.size() != x.rows())
    throw std::invalid_argument("logistic objective: length mismatch");
  if (num_outputs < 1) throw std::invalid_argument("logistic objective: no outputs");
  total_weight_ = std::accumulate(c_.begin(), c_.end(), 0.0);
  if (!(total_weight_ > 0)) throw DataError("logistic objective: total sample weight is zero");
}

double LogisticObjective::value_and_gradient(std::span<const double> params,
                                             std::span<double> grad) const {
  const std::size_t f = x_.cols();
  const std::size_t stride = f + 1;
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0;
  std::vector<double> z(outputs_);
  for (std::size_t i = 0; i < x_.rows(); ++i) {
    if (c_[i] == 0) continue;
    const auto row = x_.row(i);
    for (std::size_t k = 0; k < outputs_; ++k)
      z[k] = dot(params.subspan(k * stride, f), row) + params[k * stride + f];
    if (outputs_ == 1) {
      const double yi = y_[i] == 1 ? 1.0 : 0.0;
      loss += c_[i] * (softplus(z[0]) - yi * z[0]);
      const double r = c_[i] * (sigmoid(z[0]) - yi);
      for (std::size_t j = 0; j < f; ++j) grad[j] += r * row[j];
      grad[f] += r;
      continue;
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (std::size_t k = 0; k < outputs_; ++k) sum += std::exp(z[k] - mx);
    const double lse = mx + std::log(sum);
    loss += c_[i] * (lse - z[static_cast<std::size_t>(y_[i])]);
    for (std::size_t k = 0; k < outputs_; ++k) {
      const double p = std::exp(z[k] - lse);
      const double r = c_[i] * (p - (static_cast<std::size_t>(y_[i]) == k ? 1.0 : 0.0));
      double* g = grad.data() + k * stride;
      for (std::size_t j = 0; j < f; ++j) g[j] += r * row[j];
      g[f] += r;
    }
  }
  double penalty = 0;
  for (std::size_t k = 0; k < outputs_; ++k)
    for (std::size_t j = 0; j < f; ++j) {
      const double w = params[k * stride + j];
      penalty += w * w;
      grad[k * stride + j] += l2_ * w;
    }
  for (auto& g : grad) g /= total_weight_;
  return (loss + 0.5 * l2_ * penalty) / total_weight_;
}

double LogisticObjective::value(std::span<const double> params) const {
  std::vector<double> g(num_params());
  return value_and_gradient(params, g);
}

DescentResult minimize(const LogisticObjective& objective, std::vector<double> start, double tol,
                       int max_iter) {
  DescentResult res;
  res.params = std::move(start);
  const std::size_t n = res.params.size();
  std::vector<double> g(n), g_new(n), trial(n);
  double f = objective.value_and_gradient(res.params, g);
  double step = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const double gn = norm(g);
    res.gradient_norm = gn;
    res.iterations = it;
    if (gn <= tol) {
      res.converged = true;
      return res;
    }
    double f_new = 0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = res.params[i] - step * g[i];
      f_new = objective.value_and_gradient(trial, g_new);
      if (f_new <= f - 1e-4 * step * gn * gn) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    double sy = 0, ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = trial[i] - res.params[i];
      sy += s * (g_new[i] - g[i]);
      ss += s * s;
    }
    res.params.swap(trial);
    g.swap(g_new);
    f = f_new;
    step = sy > 0 ? std::clamp(ss / sy, 1e-10, 1e10) : std::min(step * 2.0, 1e10);
  }
  res.gradient_norm = norm(g);
  res.converged = res.gradient_norm <= tol;
  res.iterations = max_iter;
  return res;
}

std::vector<double> balanced_weights(std::span<const int> y, int num_classes) {
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  for (int v : y) counts[static_cast<std::size_t>(v)] += 1.0;
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    w[i] = static_cast<double>(y.size()) /
           (static_cast<double>(num_classes) * counts[static_cast<std::size_t>(y[i])]);
  return w;
}

Matrix LogisticRegression::standardize(const Matrix& x) const {
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - mean_[c]) / scale_[c];
  return out;
}

LogisticRegression LogisticRegression::fit(const Matrix& x, std::span<const int> y,
                                           int num_classes, const LogisticParams& params) {
  if (x.rows() == 0) throw DataError("cannot fit on an empty matrix");
  if (num_classes < 2) throw UsageError("logistic regression needs at least two classes");
  LogisticRegression m;
  m.num_classes_ = num_classes;
  const std::size_t f = x.cols();
  m.mean_.assign(f, 0.0);
  m.scale_.assign(f, 1.0);
  const double n = static_cast<double>(x.rows());
  for (std::size_t c = 0; c < f; ++c) {
    double s = 0, s2 = 0;
    for (std::size_t r = 0; r < x.rows(); ++r) s += x(r, c);
    const double mean = s / n;
    for (std::size_t r = 0; r < x.rows(); ++r) s2 += (x(r, c) - mean) * (x(r, c) - mean);
    const double sd = std::sqrt(s2 / n);
    m.mean_[c] = mean;
    m.scale_[c] = sd > 1e-12 ? sd : 1.0;
  }
  const Matrix xs = m.standardize(x);
  const std::vector<double> weights = params.class_weight == ClassWeight::balanced
                                          ? balanced_weights(y, num_classes)
                                          : std::vector<double>(x.rows(), 1.0);

  auto solve = [&](std::span<const int> labels, std::size_t outputs) {
    const LogisticObjective obj(xs, labels, weights, outputs, params.l2);
    auto r = minimize(obj, std::vector<double>(obj.num_params(), 0.0), params.tol, params.max_iter);
    m.grad_norm_ = std::max(m.grad_norm_, r.gradient_norm);
    m.converged_ = m.converged_ && r.converged;
    m.params_.push_back(std::move(r.params));
  };

  m.converged_ = true;
  if (num_classes == 2) {
    solve(y, 1);
    m.block_class_ = {1};
  } else if (params.multi_class == MultiClass::automatic) {
    solve(y, static_cast<std::size_t>(num_classes));
  } else {
    m.ovr_ = true;
    std::vector<int> bin(y.size());
    for (int k = 0; k < num_classes; ++k) {
      for (std::size_t i = 0; i < y.size(); ++i) bin[i] = y[i] == k ? 1 : 0;
      solve(bin, 1);
      m.block_class_.push_back(k);
    }
  }
  return m;
}

Matrix LogisticRegression::predict_proba(const Matrix& x) const {
  const Matrix xs = standardize(x);
  const auto k = static_cast<std::size_t>(num_classes_);
  const std::size_t f = xs.cols();
  Matrix out(x.rows(), k);
  for (std::size_t r = 0; r < xs.rows(); ++r) {
    const auto row = xs.row(r);
    auto dst = out.row(r);
    if (block_class_.empty()) {
      const auto& p = params_[0];
      for (std::size_t c = 0; c < k; ++c)
        dst[c] = dot(std::span<const double>(p).subspan(c * (f + 1), f), row) + p[c * (f + 1) + f];
      softmax(dst);
    } else if (!ovr_) {
      const auto& p = params_[0];
      const double z = dot(std::span<const double>(p).subspan(0, f), row) + p[f];
      dst[1] = sigmoid(z);
      dst[0] = 1.0 - dst[1];
    } else {
      double total = 0;
      for (std::size_t b = 0; b < params_.size(); ++b) {
        const auto& p = params_[b];
        const double z = dot(std::span<const double>(p).subspan(0, f), row) + p[f];
        dst[static_cast<std::size_t>(block_class_[b])] = sigmoid(z);
        total += sigmoid(z);
      }
      for (auto& v : dst) v = total > 0 ? v / total : 1.0 / static_cast<double>(k);
    }
  }
  return out;
}

Json LogisticRegression::to_json() const {
  Json j;
  j["kind"] = kind();
  j["num_classes"] = num_classes_;
  j["ovr"] = ovr_;
  j["mean"] = mean_;
  j["scale"] = scale_;
  j["params"] = params_;
  j["block_class"] = block_class_;
  j["gradient_norm"] = grad_norm_;
  j["converged"] = converged_;
  return j;
}

LogisticRegression LogisticRegression::from_json(const Json& j) {
  LogisticRegression m;
  m.num_classes_ = j.at("num_classes").get<int>();
  m.ovr_ = j.at("ovr").get<bool>();
  m.mean_ = j.at("mean").get<std::vector<double>>();
  m.scale_ = j.at("scale").get<std::vector<double>>();
  m.params_ = j.at("params").get<std::vector<std::vector<double>>>();
  m.block_class_ = j.at("block_class").get<std::vector<int>>();
  m.grad_norm_ = j.at("gradient_norm").get<double>();
  m.converged_ = j.at("converged").get<bool>();
  return m;
}

LinearRegression LinearRegression::fit(const Matrix& x, std::span<const double> y) {
  if (x.rows() == 0) throw DataError("cannot fit on an empty matrix");
  if (y.size() != x.rows()) throw std::invalid_argument("target length mismatch");
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto f = static_cast<Eigen::Index>(x.cols());
  Eigen::MatrixXd a(n, f + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    a(r, 0) = 1.0;
    for (Eigen::Index c = 0; c < f; ++c)
      a(r, c + 1) = x(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
    b(r) = y[static_cast<std::size_t>(r)];
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  const Eigen::VectorXd beta = cod.solve(b);
  LinearRegression m;
  m.rank_deficient_ = cod.rank() < f + 1;
  m.intercept_ = beta(0);
  m.coef_.resize(static_cast<std::size_t>(f));
  for (Eigen::Index c = 0; c < f; ++c) m.coef_[static_cast<std::size_t>(c)] = beta(c + 1);
  return m;
}

std::vector<double> LinearRegression::predict_values(const Matrix& x) const {
  std::vector<double> out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = intercept_ + dot(coef_, x.row(r));
  return out;
}

Json LinearRegression::to_json() const {
  Json j;
  j["kind"] = kind();
  j["intercept"] = intercept_;
  j["coef"] = coef_;
  j["rank_deficient"] = rank_deficient_;
  return j;
}

LinearRegression LinearRegression::from_json(const Json& j) {
  LinearRegression m;
  m.intercept_ = j.at("intercept").get<double>();
  m.coef_ = j.at("coef").get<std::vector<double>>();
  m.rank_deficient_ = j.at("rank_deficient").get<bool>();
  return m;
}

}  // namespace parkcharge::learners
