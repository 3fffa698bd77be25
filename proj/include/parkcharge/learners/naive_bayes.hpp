#pragma once

#include <span>
#include <vector>

#include "parkcharge/learners/estimator.hpp"

namespace parkcharge::learners {

/// Gaussian naive Bayes. Variances get epsilon = var_smoothing * (largest column variance).
class GaussianNB final : public Estimator {
public:
  static GaussianNB fit(const Matrix& x, std::span<const int> y, int num_classes,
                        double var_smoothing = 1e-9);
  static GaussianNB from_json(const Json& j);

  std::string kind() const override { return "gaussian_nb"; }
  bool probabilistic() const override { return true; }
  Matrix predict_proba(const Matrix& x) const override;
  Json to_json() const override;

  const std::vector<double>& priors() const { return prior_; }

private:
  int num_classes_ = 1;
  std::vector<double> prior_;
  /// theta_[k * F + j], var_[k * F + j]
  std::vector<double> theta_;
  std::vector<double> var_;
  std::size_t features_ = 0;
};

/// Multinomial naive Bayes with Laplace/Lidstone smoothing. Negative columns
/// are shifted by their training minimum so counts stay non-negative.
class MultinomialNB final : public Estimator {
public:
  static MultinomialNB fit(const Matrix& x, std::span<const int> y, int num_classes,
                           double alpha = 1.0);
  static MultinomialNB from_json(const Json& j);

  std::string kind() const override { return "multinomial_nb"; }
  bool probabilistic() const override { return true; }
  Matrix predict_proba(const Matrix& x) const override;
  Json to_json() const override;

private:
  int num_classes_ = 1;
  std::size_t features_ = 0;
  std::vector<double> shift_;
  std::vector<double> log_prior_;
  std::vector<double> log_prob_;
};

}  // namespace parkcharge::learners
