#pragma once

#include <span>
#include <vector>

#include "parkcharge/learners/estimator.hpp"

namespace parkcharge::learners {

enum class ClassWeight { uniform, balanced };
enum class MultiClass { automatic, ovr };

struct LogisticParams {
  ClassWeight class_weight = ClassWeight::uniform;
  MultiClass multi_class = MultiClass::automatic;
  double l2 = 1.0;
  double tol = 1e-6;
  int max_iter = 1000;
};

/// Weighted, L2-penalised logistic loss on standardised features:
///   J(theta) = (sum_i c_i * CE_i + l2/2 * |W|^2) / sum_i c_i
/// with unpenalised intercepts. Softmax over `num_outputs` classes when
/// num_outputs > 1, otherwise a single sigmoid output for labels in {0, 1}.
/// Parameters are laid out output-major: [w_0, b_0, w_1, b_1, ...].
class LogisticObjective {
public:
  LogisticObjective(const Matrix& x, std::span<const int> y, std::span<const double> sample_weights,
                    std::size_t num_outputs, double l2);

  std::size_t num_params() const { return outputs_ * (x_.cols() + 1); }
  double value_and_gradient(std::span<const double> params, std::span<double> grad) const;
  double value(std::span<const double> params) const;

private:
  const Matrix& x_;
  std::span<const int> y_;
  std::span<const double> c_;
  std::size_t outputs_;
  double l2_;
  double total_weight_;
};

struct DescentResult {
  std::vector<double> params;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking.
DescentResult minimize(const LogisticObjective& objective, std::vector<double> start, double tol,
                       int max_iter);

/// Multinomial (or binary) logistic regression, or one-vs-rest.
class LogisticRegression final : public Estimator {
public:
  static LogisticRegression fit(const Matrix& x, std::span<const int> y, int num_classes,
                                const LogisticParams& params);
  static LogisticRegression from_json(const Json& j);

  std::string kind() const override { return "logistic"; }
  bool probabilistic() const override { return true; }
  Matrix predict_proba(const Matrix& x) const override;
  Json to_json() const override;

  /// Largest final gradient norm over the sub-problems solved.
  double gradient_norm() const { return grad_norm_; }
  bool converged() const { return converged_; }

  /// Standardises a copy of x with the training statistics.
  Matrix standardize(const Matrix& x) const;

private:
  int num_classes_ = 2;
  bool ovr_ = false;
  std::vector<double> mean_;
  std::vector<double> scale_;
  /// One parameter block per sub-model: the softmax model, or K (ovr) / 1 (binary) sigmoid models.
  std::vector<std::vector<double>> params_;
  /// Class each sigmoid block scores; empty for the softmax model.
  std::vector<int> block_class_;
  double grad_norm_ = 0.0;
  bool converged_ = false;
};

/// Per-sample weights n / (K * n_c); classes absent from y get no weight.
std::vector<double> balanced_weights(std::span<const int> y, int num_classes);

/// Ordinary least squares with intercept, solved by complete orthogonal
/// decomposition so rank-deficient designs get the minimum-norm solution.
class LinearRegression final : public Estimator {
public:
  static LinearRegression fit(const Matrix& x, std::span<const double> y);
  static LinearRegression from_json(const Json& j);

  std::string kind() const override { return "linear_regression"; }
  bool probabilistic() const override { return false; }
  std::vector<double> predict_values(const Matrix& x) const override;
  Json to_json() const override;

  double intercept() const { return intercept_; }
  const std::vector<double>& coefficients() const { return coef_; }
  bool rank_deficient() const { return rank_deficient_; }

private:
  double intercept_ = 0.0;
  std::vector<double> coef_;
  bool rank_deficient_ = false;
};

}  // namespace parkcharge::learners
