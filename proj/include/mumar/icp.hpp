#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mumar/geometry.hpp"

namespace mumar {

struct IcpOptions {
  std::size_t max_iterations = 50;
  double rejection_fraction = 0.3;  // worst point-to-plane residuals dropped per iteration
  double convergence_delta = 1e-7;  // stop when the RMS improves by less
  bool use_boundaries = true;
  std::size_t boundary_k = 12;
  double boundary_gap_deg = 120.0;

  void validate() const;
};

/// A point is on the boundary when its k neighbours, projected on the tangent
/// plane, leave an angular gap wider than gap_deg around it. Uses the cloud's
/// normals when present, local PCA otherwise. Throws kTooFewPoints if |cloud| <= k.
std::vector<bool> detect_boundaries(const PointCloud& cloud, std::size_t k, double gap_deg = 120.0);

struct IcpResult {
  RigidTransform transform;      // maps data onto scene
  std::vector<double> rms_trace; // accepted iterations only, non-increasing
  std::size_t iterations = 0;
  bool converged = false;
};

/// Point-to-plane ICP with worst-match rejection and optional boundary
/// rejection. scene must carry normals. Throws kNoCorrespondences when
/// rejection leaves fewer than six pairs.
IcpResult icp_point_to_plane(const PointCloud& data, const PointCloud& scene, const IcpOptions& opts,
                             const RigidTransform& initial = RigidTransform::identity());

struct IcpSequenceResult {
  std::vector<RigidTransform> transforms;  // view frame -> view 0 frame
  bool converged = true;
};

/// Registers view i onto view i-1 starting from identity and chains the
/// results. Every view needs normals.
IcpSequenceResult icp_register_sequence(std::span<const PointCloud> views, const IcpOptions& opts);

}  // namespace mumar
