#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedmol/clustering.hpp"

namespace fedmol {

struct RandomForestConfig {
  int n_trees = 100;
  int max_depth = 0;           // 0 = unlimited
  int features_per_split = 0;  // 0 = round(sqrt(n_features))
  int min_samples_leaf = 1;
  std::uint64_t seed = 0;
  bool parallel = true;
};

/// Classification forest: CART trees on Gini impurity, bootstrap samples,
/// per-split feature subsampling. Deterministic per seed regardless of the
/// parallel flag.
class RandomForest {
 public:
  void fit(const Matrix& x, std::span<const int> y, const RandomForestConfig& cfg);

  std::vector<int> predict(const Matrix& x) const;

  /// Mean decrease in impurity per column; each tree is normalised before
  /// averaging. Sums to 1 unless no tree found a split (then all zero).
  const std::vector<double>& feature_importances() const noexcept { return importances_; }

  std::size_t tree_count() const noexcept { return trees_.size(); }

  struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1, right = -1;
    int majority = 0;
  };
  using Tree = std::vector<Node>;

 private:
  std::vector<Tree> trees_;
  std::vector<double> importances_;
  int n_classes_ = 0;
};

}  // namespace fedmol
