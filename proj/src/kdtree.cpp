#include "mumar/kdtree.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <numeric>

#include "mumar/error.hpp"
#include "mumar/simd.hpp"

namespace mumar {

namespace {

constexpr std::size_t kMaxLeaf = 64;

bool closer(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  return a.squared_distance < b.squared_distance ||
         (a.squared_distance == b.squared_distance && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::span<const Point3> points, std::size_t leaf_size)
    : leaf_size_(std::clamp<std::size_t>(leaf_size, 1, kMaxLeaf)), source_(points.begin(), points.end()) {
  index_.resize(points.size());
  std::iota(index_.begin(), index_.end(), std::size_t{0});
  if (!index_.empty()) {
    nodes_.reserve(2 * (index_.size() / leaf_size_ + 1));
    build(0, index_.size());
  }
  xs_.resize(index_.size());
  ys_.resize(index_.size());
  zs_.resize(index_.size());
  for (std::size_t i = 0; i < index_.size(); ++i) {
    const Point3& p = source_[index_[i]];
    xs_[i] = p.x();
    ys_[i] = p.y();
    zs_[i] = p.z();
  }
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{});
  if (end - begin <= leaf_size_) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  Eigen::Vector3d lo = source_[index_[begin]];
  Eigen::Vector3d hi = lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(source_[index_[i]]);
    hi = hi.cwiseMax(source_[index_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                   [&](std::size_t a, std::size_t b) {
                     const double ca = source_[a](axis);
                     const double cb = source_[b](axis);
                     return ca < cb || (ca == cb && a < b);
                   });
  const double split = source_[index_[mid]](axis);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

KdTree::Neighbor KdTree::nearest(const Point3& query) const {
  if (index_.empty()) throw Error(ErrorCode::kEmptyInput, "nearest() on empty k-d tree");
  Neighbor best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  search_nearest(0, query, best);
  return best;
}

void KdTree::search_nearest(int node_id, const Point3& q, Neighbor& best) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    std::array<double, kMaxLeaf> d2;
    const std::size_t n = node.end - node.begin;
    simd::squared_distances({xs_.data() + node.begin, n}, {ys_.data() + node.begin, n},
                            {zs_.data() + node.begin, n}, q, {d2.data(), n});
    for (std::size_t i = 0; i < n; ++i) {
      const Neighbor cand{index_[node.begin + i], d2[i]};
      if (closer(cand, best)) best = cand;
    }
    return;
  }
  const double diff = q(node.axis) - node.split;
  const int near_side = diff < 0.0 ? node.left : node.right;
  const int far_side = diff < 0.0 ? node.right : node.left;
  search_nearest(near_side, q, best);
  // <= keeps equal-distance candidates with lower indices reachable.
  if (diff * diff <= best.squared_distance) search_nearest(far_side, q, best);
}

std::vector<KdTree::Neighbor> KdTree::knn(const Point3& query, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (k == 0 || index_.empty()) return heap;
  heap.reserve(k + 1);
  search_knn(0, query, std::min(k, index_.size()), heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void KdTree::search_knn(int node_id, const Point3& q, std::size_t k, std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    std::array<double, kMaxLeaf> d2;
    const std::size_t n = node.end - node.begin;
    simd::squared_distances({xs_.data() + node.begin, n}, {ys_.data() + node.begin, n},
                            {zs_.data() + node.begin, n}, q, {d2.data(), n});
    for (std::size_t i = 0; i < n; ++i) {
      const Neighbor cand{index_[node.begin + i], d2[i]};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = q(node.axis) - node.split;
  const int near_side = diff < 0.0 ? node.left : node.right;
  const int far_side = diff < 0.0 ? node.right : node.left;
  search_knn(near_side, q, k, heap);
  if (heap.size() < k || diff * diff <= heap.front().squared_distance) {
    search_knn(far_side, q, k, heap);
  }
}

}  // namespace mumar
