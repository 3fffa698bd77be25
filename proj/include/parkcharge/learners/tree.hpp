#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "parkcharge/learners/estimator.hpp"
#include "parkcharge/rng.hpp"

namespace parkcharge::learners {

/// Column-wise discretisation shared by every tree of an ensemble. Columns
/// with at most `max_bins` distinct values are binned exactly (thresholds at
/// midpoints between consecutive values), so split search is exact CART.
/// Wider columns fall back to quantile thresholds.
class BinnedData {
public:
  static BinnedData build(const Matrix& x, std::size_t max_bins = 256);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t num_bins(std::size_t col) const { return thresholds_[col].size() + 1; }
  std::uint16_t bin(std::size_t row, std::size_t col) const { return bins_[col * rows_ + row]; }
  /// Split after bin b sends x <= threshold(col, b) left.
  double threshold(std::size_t col, std::size_t b) const { return thresholds_[col][b]; }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint16_t> bins_;
  std::vector<std::vector<double>> thresholds_;
};

struct TreeParams {
  /// 0 grows until leaves are pure or unsplittable.
  int max_depth = 0;
  /// Features tried per split; 0 means all of them.
  int max_features = 0;
  int min_samples_split = 2;
};

/// Leaf value hook for regression trees; gets the training rows of the leaf.
using LeafValueFn = std::function<double(std::span<const std::size_t>)>;

/// CART tree: Gini impurity for classification, squared error for regression.
/// Rows with zero weight are ignored, so bootstrap counts can be passed as weights.
class DecisionTree final : public Estimator {
public:
  struct Node {
    int feature = -1;  ///< -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> value;  ///< class distribution, or a single regression output
  };

  static DecisionTree fit_classifier(const BinnedData& data, std::span<const int> y,
                                     int num_classes, std::span<const double> weights,
                                     const TreeParams& params, Rng& rng);
  static DecisionTree fit_regressor(const BinnedData& data, std::span<const double> y,
                                    std::span<const double> weights, const TreeParams& params,
                                    Rng& rng, const LeafValueFn& leaf_value = {});

  static DecisionTree from_json(const Json& j);

  std::string kind() const override { return "decision_tree"; }
  bool probabilistic() const override { return classifier_; }
  Matrix predict_proba(const Matrix& x) const override;
  std::vector<double> predict_values(const Matrix& x) const override;
  std::optional<std::vector<double>> impurity_importance() const override;
  Json to_json() const override;

  /// Leaf reached by one sample.
  const std::vector<double>& leaf(std::span<const double> row) const;
  /// Unnormalised weighted impurity decrease per column.
  const std::vector<double>& raw_importance() const { return importance_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t depth() const;
  int num_classes() const { return num_classes_; }

private:
  bool classifier_ = true;
  int num_classes_ = 1;
  std::vector<Node> nodes_;
  std::vector<double> importance_;

  friend class TreeBuilder;
};

}  // namespace parkcharge::learners
