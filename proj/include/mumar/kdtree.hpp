#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mumar/geometry.hpp"

namespace mumar {

/// Static 3D k-d tree over a borrowed-then-copied point set. Queries are
/// exact: ties on distance resolve to the lowest original index, so results
/// never depend on the tree layout.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index;
    double squared_distance;
  };

  explicit KdTree(std::span<const Point3> points, std::size_t leaf_size = 16);

  std::size_t size() const { return index_.size(); }

  /// Throws kEmptyInput on an empty tree.
  Neighbor nearest(const Point3& query) const;
  /// Up to k neighbours sorted by (distance, index).
  std::vector<Neighbor> knn(const Point3& query, std::size_t k) const;

 private:
  struct Node {
    // Leaf when left < 0: [begin, end) into the permuted arrays.
    int left = -1;
    int right = -1;
    int axis = 0;
    double split = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
  };

  int build(std::size_t begin, std::size_t end);
  void search_nearest(int node, const Point3& q, Neighbor& best) const;
  void search_knn(int node, const Point3& q, std::size_t k, std::vector<Neighbor>& heap) const;

  std::size_t leaf_size_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> index_;  // permuted original indices
  std::vector<double> xs_, ys_, zs_;
  std::vector<Point3> source_;
};

}  // namespace mumar
