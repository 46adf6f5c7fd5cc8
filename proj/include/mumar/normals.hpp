#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mumar/geometry.hpp"
#include "mumar/kdtree.hpp"

namespace mumar {

/// Local-PCA normals from the k nearest neighbours of every point (the point
/// itself included), flipped so that normal . (viewpoint - point) >= 0.
/// Throws kTooFewPoints when |cloud| <= k and kInvalidArgument when k < 3.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Point3& viewpoint);

/// Same, reusing a tree already built over cloud.points.
PointCloud estimate_normals(const PointCloud& cloud, const KdTree& tree, std::size_t k,
                            const Point3& viewpoint);

/// Least-variance direction of a neighbourhood (unnormalized sign).
Eigen::Vector3d least_variance_direction(std::span<const Point3> neighbourhood);

}  // namespace mumar
