#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mumar/geometry.hpp"

namespace mumar {

/// Prior knowledge about a multi-planar marker: how many faces can be seen at
/// once and which inter-face angles are legal. Size and pose are not part of it.
struct MarkerConstraints {
  std::size_t max_visible_planes = 3;
  std::vector<double> pairwise_angles{90.0};  // degrees
  double angle_tolerance = 2.0;               // degrees
  double inlier_distance = 0.02;              // scene length units
  double cluster_overshoot = 0.4;

  /// Throws kInvalidArgument on out-of-range fields.
  void validate() const;
  /// Number of k-means clusters: round(max_visible * (1 + overshoot)).
  std::size_t cluster_count() const;

  static MarkerConstraints cube(double inlier_distance = 0.02, double angle_tolerance = 2.0);
};

struct FaceCluster {
  std::vector<std::size_t> member_indices;
  PlaneModel seed_model;
};

struct RansacParams {
  std::size_t sample_size = 20;
  std::size_t max_restarts = 500;
  std::size_t cluster_attempts = 4;  // fresh k-means seeds tried when no seed sample fits
};

/// k-means over (position scaled into the unit ball, normal), then merges
/// coplanar clusters and drops those below 1% of the cloud. At most
/// max_visible_planes clusters, largest first.
std::vector<FaceCluster> cluster_faces(const PointCloud& cloud, const MarkerConstraints& constraints,
                                       std::uint64_t rng_seed);

/// Pairwise inter-plane angles folded to [0, 90] must each match an allowed
/// angle within tolerance, and there can be no more planes than max_visible.
bool check_constraints(const std::vector<PlaneModel>& planes, const MarkerConstraints& constraints);

/// Constraint-checked RANSAC: redraw joint seed samples until the seed planes
/// satisfy the constraints (reclustering with a derived seed when a clustering
/// runs out of restarts), then grow each plane point by point, keeping a
/// point only if it is an inlier and the refitted set still satisfies the
/// constraints. Normals of the result face the side the cloud normals face.
std::vector<PlaneModel> detect_marker_planes(const PointCloud& cloud,
                                             const MarkerConstraints& constraints,
                                             std::uint64_t rng_seed, const RansacParams& params = {});

/// Fraction of the given points within inlier_distance of the plane.
double inlier_ratio(const std::vector<Point3>& points, const PlaneModel& plane, double inlier_distance);

}  // namespace mumar
