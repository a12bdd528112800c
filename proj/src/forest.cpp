#include "geofair/forest.hpp"

#include <algorithm>
#include <string>

#include "geofair/error.hpp"
#include "geofair/parallel.hpp"
#include "geofair/rng.hpp"

namespace geofair {

namespace {

constexpr std::uint64_t kStreamTree = 21;

struct Task {
  int node;
  std::size_t begin;
  std::size_t end;
  int depth;
};

}  // namespace

void ForestHyper::validate() const {
  if (n_estimators < 1) {
    throw Error(ErrorCode::InvalidArgument, "n_estimators must be >= 1");
  }
  if (max_depth && *max_depth < 0) {
    throw Error(ErrorCode::InvalidArgument, "max_depth must be >= 0");
  }
  if (min_samples_leaf < 1) {
    throw Error(ErrorCode::InvalidArgument, "min_samples_leaf must be >= 1");
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[n.feature] <= n.threshold ? n.left
                                                             : n.right);
  }
  return nodes[i].value;
}

int RegressionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  // Children are always created after their parent.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

RegressionTree grow_tree(const Matrix& x, std::span<const double> y,
                         std::span<const std::uint32_t> counts,
                         std::optional<int> max_depth, int min_samples_leaf) {
  const std::size_t n = x.rows();
  const std::size_t p = x.cols();
  if (y.size() != n || counts.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "tree input length mismatch");
  }
  std::vector<std::uint32_t> active;
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] > 0) active.push_back(static_cast<std::uint32_t>(i));
  }
  if (active.empty()) {
    throw Error(ErrorCode::InsufficientData, "tree has no training rows");
  }

  // One ordering of the node's rows per feature; each node owns the same
  // contiguous range in every ordering.
  std::vector<std::vector<std::uint32_t>> order(p, active);
  for (std::size_t f = 0; f < p; ++f) {
    const auto column = x.col(f);
    std::stable_sort(order[f].begin(), order[f].end(),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return column[a] < column[b];
                     });
  }
  std::vector<char> goes_left(n, 0);
  std::vector<std::uint32_t> scratch(active.size());
  const auto min_leaf = static_cast<std::uint64_t>(min_samples_leaf);

  RegressionTree tree;
  tree.nodes.emplace_back();
  std::vector<Task> stack{{0, 0, active.size(), 0}};
  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();

    std::uint64_t weight = 0;
    double sum = 0.0;
    double y_min = y[order[0][task.begin]];
    double y_max = y_min;
    for (std::size_t i = task.begin; i < task.end; ++i) {
      const auto r = order[0][i];
      weight += counts[r];
      sum += counts[r] * y[r];
      y_min = std::min(y_min, y[r]);
      y_max = std::max(y_max, y[r]);
    }
    {
      auto& node = tree.nodes[task.node];
      node.samples = weight;
      node.value = y_min == y_max ? y_min : sum / static_cast<double>(weight);
    }
    if ((max_depth && task.depth >= *max_depth) || weight < 2 * min_leaf ||
        y_min == y_max) {
      continue;
    }

    const double total_w = static_cast<double>(weight);
    double best_score = sum * sum / total_w;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::size_t best_left_rows = 0;
    for (std::size_t f = 0; f < p; ++f) {
      const auto column = x.col(f);
      const auto& ord = order[f];
      std::uint64_t left_w = 0;
      double left_sum = 0.0;
      for (std::size_t i = task.begin; i + 1 < task.end; ++i) {
        const auto r = ord[i];
        left_w += counts[r];
        left_sum += counts[r] * y[r];
        const std::uint64_t right_w = weight - left_w;
        if (right_w < min_leaf) break;
        const double xi = column[r];
        const double xn = column[ord[i + 1]];
        if (!(xn > xi) || left_w < min_leaf) continue;
        const double right_sum = sum - left_sum;
        const double score = left_sum * left_sum / static_cast<double>(left_w) +
                             right_sum * right_sum / static_cast<double>(right_w);
        if (score > best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          double mid = xi + (xn - xi) / 2.0;
          if (!(mid < xn)) mid = xi;
          best_threshold = mid;
          best_left_rows = i + 1 - task.begin;
        }
      }
    }
    if (best_feature < 0) continue;

    const auto& split_order = order[best_feature];
    for (std::size_t i = task.begin; i < task.end; ++i) {
      goes_left[split_order[i]] = i < task.begin + best_left_rows;
    }
    for (std::size_t f = 0; f < p; ++f) {
      if (static_cast<int>(f) == best_feature) continue;
      auto& ord = order[f];
      std::size_t l = 0;
      std::size_t r = best_left_rows;
      for (std::size_t i = task.begin; i < task.end; ++i) {
        const auto row = ord[i];
        scratch[goes_left[row] ? l++ : r++] = row;
      }
      std::copy(scratch.begin(), scratch.begin() + (task.end - task.begin),
                ord.begin() + static_cast<std::ptrdiff_t>(task.begin));
    }

    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    auto& node = tree.nodes[task.node];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = left + 1;
    const std::size_t mid = task.begin + best_left_rows;
    stack.push_back({left + 1, mid, task.end, task.depth + 1});
    stack.push_back({left, task.begin, mid, task.depth + 1});
  }
  return tree;
}

double Forest::predict(std::span<const double> x) const {
  const double first = trees.front().predict(x);
  double sum = first;
  bool all_equal = true;
  for (std::size_t t = 1; t < trees.size(); ++t) {
    const double v = trees[t].predict(x);
    all_equal = all_equal && v == first;
    sum += v;
  }
  // An exact average for unanimous trees keeps constant targets exact.
  return all_equal ? first : sum / static_cast<double>(trees.size());
}

Forest fit_forest(const Matrix& x, std::span<const double> y,
                  const ForestHyper& hp, std::uint64_t seed, unsigned jobs) {
  hp.validate();
  const std::size_t n = x.rows();
  if (n == 0) throw Error(ErrorCode::InsufficientData, "no training rows");
  Forest forest;
  forest.trees.resize(static_cast<std::size_t>(hp.n_estimators));
  parallel_for(forest.trees.size(), jobs, [&](std::size_t t) {
    std::vector<std::uint32_t> counts(n, hp.bootstrap ? 0u : 1u);
    if (hp.bootstrap) {
      Rng rng(derive_seed(seed, kStreamTree, t));
      for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(n)];
    }
    forest.trees[t] =
        grow_tree(x, y, counts, hp.max_depth, hp.min_samples_leaf);
  });
  return forest;
}

}  // namespace geofair
