#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "parkcharge/matrix.hpp"

namespace parkcharge::learners {

using Json = nlohmann::ordered_json;

/// A fitted model. Probabilistic estimators return one K-wide row per sample;
/// regressors return one value per sample.
class Estimator {
public:
  virtual ~Estimator() = default;

  virtual std::string kind() const = 0;
  virtual bool probabilistic() const = 0;

  /// Row-stochastic K-column matrix. Only valid when probabilistic().
  virtual Matrix predict_proba(const Matrix& x) const;
  /// Continuous outputs. Only valid for regressors.
  virtual std::vector<double> predict_values(const Matrix& x) const;

  /// Normalised impurity-decrease importance per input column, when the model has one.
  virtual std::optional<std::vector<double>> impurity_importance() const { return std::nullopt; }

  virtual Json to_json() const = 0;
};

/// Rebuilds an estimator from Estimator::to_json output.
std::unique_ptr<Estimator> estimator_from_json(const Json& j);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

/// In-place softmax.
void softmax(std::span<double> z);

}  // namespace parkcharge::learners
