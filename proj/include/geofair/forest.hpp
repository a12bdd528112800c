#pragma once

// CART regression trees and bagged forests over a handful of dense features.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "geofair/matrix.hpp"

namespace geofair {

struct ForestHyper {
  int n_estimators = 100;
  std::optional<int> max_depth;  // nullopt = unlimited
  int min_samples_leaf = 1;
  /// Test hook: when false every tree sees each training row exactly once.
  bool bootstrap = true;

  void validate() const;
  bool operator==(const ForestHyper&) const = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  double value = 0.0;  // mean target of the node's (weighted) samples
  std::uint64_t samples = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int depth() const;
  bool operator==(const RegressionTree&) const = default;
};

/// Grows one tree on the rows of `x` (column-major, one column per feature)
/// with integer sample weights `counts` (bootstrap multiplicities; rows with
/// zero weight are ignored). Split candidates are midpoints between
/// consecutive distinct values; the split maximising the reduction in
/// weighted squared error wins, earliest feature then smallest threshold on
/// ties. A node splits only if both children keep min_samples_leaf weight.
RegressionTree grow_tree(const Matrix& x, std::span<const double> y,
                         std::span<const std::uint32_t> counts,
                         std::optional<int> max_depth, int min_samples_leaf);

struct Forest {
  std::vector<RegressionTree> trees;

  double predict(std::span<const double> x) const;
};

/// Bags `hp.n_estimators` trees; tree t resamples with its own substream of
/// `seed`, so the forest is identical for any `jobs`.
Forest fit_forest(const Matrix& x, std::span<const double> y,
                  const ForestHyper& hp, std::uint64_t seed, unsigned jobs = 1);

}  // namespace geofair
