#pragma once

#include <memory>
#include <span>
#include <vector>

#include "parkcharge/learners/estimator.hpp"

namespace parkcharge::learners {

/// Frank-Hall recombination of P(y > c_k), k = 0..K-2, into a K-class
/// distribution. Negative entries are clipped to 0 and the vector renormalised.
std::vector<double> ordinal_probabilities(std::span<const double> exceed);

/// K-1 binary models, model k scoring P(y > k). A threshold whose training
/// targets are all one value is a constant model holding that prior.
class OrdinalEstimator final : public Estimator {
public:
  struct Threshold {
    std::shared_ptr<const Estimator> model;  ///< null for a constant threshold
    double constant = 0.0;
  };

  OrdinalEstimator(int num_classes, std::vector<Threshold> thresholds);
  static OrdinalEstimator from_json(const Json& j);

  std::string kind() const override { return "ordinal"; }
  bool probabilistic() const override { return true; }
  Matrix predict_proba(const Matrix& x) const override;
  std::optional<std::vector<double>> impurity_importance() const override;
  Json to_json() const override;

  const std::vector<Threshold>& thresholds() const { return thresholds_; }

private:
  int num_classes_;
  std::vector<Threshold> thresholds_;
};

}  // namespace parkcharge::learners
