#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace geofair {

/// Static k-d tree for exact Euclidean nearest-neighbour queries.
///
/// Ties in distance are broken by the smaller `tie_rank` of the candidate
/// points, so the answer is unique and matches an exhaustive scan.
class KdTree {
 public:
  /// `points` is row-major, `dims` values per point; tie_rank has one entry
  /// per point.
  KdTree(std::vector<double> points, std::size_t dims,
         std::vector<std::uint64_t> tie_rank);

  struct Hit {
    std::size_t index = 0;
    double squared_distance = 0.0;
  };

  Hit nearest(std::span<const double> query) const;

  std::size_t size() const { return tie_rank_.size(); }
  std::size_t dims() const { return dims_; }

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int split_dim = -1;  // -1 for leaves
    double split_value = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  void search(int node, std::span<const double> query, Hit& best,
              std::uint64_t& best_rank) const;
  double squared_distance(std::span<const double> query,
                          std::size_t point) const;

  std::vector<double> points_;
  std::size_t dims_;
  std::vector<std::uint64_t> tie_rank_;
  std::vector<std::size_t> perm_;
  std::vector<Node> nodes_;
};

}  // namespace geofair
