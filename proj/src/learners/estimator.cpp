#include "parkcharge/learners/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "parkcharge/common.hpp"
#include "parkcharge/learners/ensemble.hpp"
#include "parkcharge/learners/linear.hpp"
#include "parkcharge/learners/naive_bayes.hpp"
#include "parkcharge/learners/ordinal.hpp"
#include "parkcharge/learners/tree.hpp"

namespace parkcharge::learners {

Matrix Estimator::predict_proba(const Matrix&) const {
  throw UsageError(kind() + " does not produce class probabilities");
}

std::vector<double> Estimator::predict_values(const Matrix&) const {
  throw UsageError(kind() + " does not produce continuous outputs");
}

std::unique_ptr<Estimator> estimator_from_json(const Json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "decision_tree") return std::make_unique<DecisionTree>(DecisionTree::from_json(j));
  if (kind == "random_forest") return std::make_unique<RandomForest>(RandomForest::from_json(j));
  if (kind == "gradient_boost")
    return std::make_unique<GradientBoost>(GradientBoost::from_json(j));
  if (kind == "adaboost") return std::make_unique<AdaBoost>(AdaBoost::from_json(j));
  if (kind == "logistic")
    return std::make_unique<LogisticRegression>(LogisticRegression::from_json(j));
  if (kind == "gaussian_nb") return std::make_unique<GaussianNB>(GaussianNB::from_json(j));
  if (kind == "multinomial_nb")
    return std::make_unique<MultinomialNB>(MultinomialNB::from_json(j));
  if (kind == "linear_regression")
    return std::make_unique<LinearRegression>(LinearRegression::from_json(j));
  if (kind == "ordinal") return std::make_unique<OrdinalEstimator>(OrdinalEstimator::from_json(j));
  throw DataError("unknown estimator kind '" + kind + "'");
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

void softmax(std::span<double> z) {
  if (z.empty()) return;
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

}  // namespace parkcharge::learners
