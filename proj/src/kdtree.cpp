#include "geofair/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "geofair/error.hpp"

namespace geofair {

namespace {

constexpr std::size_t kLeafSize = 8;

}  // namespace

KdTree::KdTree(std::vector<double> points, std::size_t dims,
               std::vector<std::uint64_t> tie_rank)
    : points_(std::move(points)), dims_(dims), tie_rank_(std::move(tie_rank)) {
  if (dims_ == 0 || points_.size() != dims_ * tie_rank_.size()) {
    throw Error(ErrorCode::InvalidArgument, "k-d tree shape mismatch");
  }
  if (tie_rank_.empty()) {
    throw Error(ErrorCode::InvalidArgument, "k-d tree needs points");
  }
  perm_.resize(tie_rank_.size());
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  nodes_.reserve(2 * perm_.size() / kLeafSize + 1);
  build(0, perm_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  // Split on the widest dimension at the median.
  std::size_t dim = 0;
  double widest = -1.0;
  for (std::size_t d = 0; d < dims_; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = points_[perm_[i] * dims_ + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      dim = d;
    }
  }
  if (widest <= 0.0) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  auto value = [&](std::size_t p) { return points_[p * dims_ + dim]; };
  std::nth_element(perm_.begin() + static_cast<std::ptrdiff_t>(begin),
                   perm_.begin() + static_cast<std::ptrdiff_t>(mid),
                   perm_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     return value(a) < value(b);
                   });
  // Points left of mid are <= split, right of mid are >= split.
  const double split = value(perm_[mid]);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  auto& node = nodes_[static_cast<std::size_t>(id)];
  node.split_dim = static_cast<int>(dim);
  node.split_value = split;
  node.left = left;
  node.right = right;
  return id;
}

double KdTree::squared_distance(std::span<const double> query,
                                std::size_t point) const {
  const double* p = points_.data() + point * dims_;
  double sum = 0.0;
  for (std::size_t d = 0; d < dims_; ++d) {
    const double diff = query[d] - p[d];
    sum += diff * diff;
  }
  return sum;
}

void KdTree::search(int node_id, std::span<const double> query, Hit& best,
                    std::uint64_t& best_rank) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.split_dim < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t p = perm_[i];
      const double d2 = squared_distance(query, p);
      if (d2 < best.squared_distance ||
          (d2 == best.squared_distance && tie_rank_[p] < best_rank)) {
        best = {p, d2};
        best_rank = tie_rank_[p];
      }
    }
    return;
  }
  const double diff = query[static_cast<std::size_t>(node.split_dim)] -
                      node.split_value;
  const int near = diff <= 0.0 ? node.left : node.right;
  const int far = diff <= 0.0 ? node.right : node.left;
  search(near, query, best, best_rank);
  // Equality is not pruned: an equidistant point may win the tie-break.
  if (diff * diff <= best.squared_distance) {
    search(far, query, best, best_rank);
  }
}

KdTree::Hit KdTree::nearest(std::span<const double> query) const {
  if (query.size() != dims_) {
    throw Error(ErrorCode::InvalidArgument, "query dimension mismatch");
  }
  Hit best{0, std::numeric_limits<double>::infinity()};
  std::uint64_t best_rank = std::numeric_limits<std::uint64_t>::max();
  search(0, query, best, best_rank);
  return best;
}

}  // namespace geofair
