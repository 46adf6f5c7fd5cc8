#include "mumar/icp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "mumar/error.hpp"
#include "mumar/kdtree.hpp"
#include "mumar/normals.hpp"
#include "mumar/simd.hpp"

namespace mumar {

void IcpOptions::validate() const {
  if (max_iterations < 1) throw Error(ErrorCode::kInvalidArgument, "max_iterations must be >= 1");
  if (!(rejection_fraction >= 0.0 && rejection_fraction < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rejection_fraction must lie in [0, 1)");
  }
  if (!(convergence_delta >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "convergence_delta must be >= 0");
  if (use_boundaries && boundary_k < 3) throw Error(ErrorCode::kInvalidArgument, "boundary_k must be >= 3");
}

std::vector<bool> detect_boundaries(const PointCloud& cloud, std::size_t k, double gap_deg) {
  if (k < 3) throw Error(ErrorCode::kInvalidArgument, "boundary detection needs k >= 3");
  if (cloud.size() <= k) throw Error(ErrorCode::kTooFewPoints, "boundary detection needs more than k points");
  const KdTree tree(cloud.points);
  const double gap = deg_to_rad(gap_deg);
  std::vector<bool> mask(cloud.size(), false);
  std::vector<Point3> hood;
  std::vector<double> angles;

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    const auto nn = tree.knn(p, k + 1);
    Eigen::Vector3d normal;
    if (cloud.has_normals()) {
      normal = cloud.normals[i];
    } else {
      hood.clear();
      for (const auto& n : nn) hood.push_back(cloud.points[n.index]);
      normal = least_variance_direction(hood).normalized();
    }
    const Eigen::Vector3d u = normal.unitOrthogonal();
    const Eigen::Vector3d v = normal.cross(u);
    angles.clear();
    for (const auto& n : nn) {
      if (n.index == i) continue;
      const Eigen::Vector3d d = cloud.points[n.index] - p;
      const double du = d.dot(u);
      const double dv = d.dot(v);
      if (du == 0.0 && dv == 0.0) continue;
      angles.push_back(std::atan2(dv, du));
    }
    if (angles.size() < 2) {
      mask[i] = true;
      continue;
    }
    std::sort(angles.begin(), angles.end());
    double widest = angles.front() + 2.0 * kPi - angles.back();
    for (std::size_t j = 1; j < angles.size(); ++j) widest = std::max(widest, angles[j] - angles[j - 1]);
    mask[i] = widest > gap;
  }
  return mask;
}

namespace {

struct Match {
  std::size_t data;
  std::size_t scene;
  double residual;
};

Eigen::Matrix3d rodrigues(const Eigen::Vector3d& omega) {
  const double angle = omega.norm();
  if (angle == 0.0) return Eigen::Matrix3d::Identity();
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

/// Pairs surviving boundary and worst-match rejection, with their RMS.
std::vector<Match> correspond(const std::vector<Point3>& moved, const PointCloud& scene, const KdTree& tree,
                              const std::vector<bool>& data_boundary, const std::vector<bool>& scene_boundary,
                              double rejection, double& rms) {
  std::vector<Match> matches;
  matches.reserve(moved.size());
  for (std::size_t i = 0; i < moved.size(); ++i) {
    if (!data_boundary.empty() && data_boundary[i]) continue;
    const auto nn = tree.nearest(moved[i]);
    if (!scene_boundary.empty() && scene_boundary[nn.index]) continue;
    const double r = scene.normals[nn.index].dot(moved[i] - scene.points[nn.index]);
    matches.push_back({i, nn.index, r});
  }
  const auto keep = static_cast<std::size_t>(
      std::floor(static_cast<double>(matches.size()) * (1.0 - rejection)));
  if (keep < matches.size()) {
    std::nth_element(matches.begin(), matches.begin() + static_cast<std::ptrdiff_t>(keep), matches.end(),
                     [](const Match& a, const Match& b) {
                       const double ra = std::abs(a.residual), rb = std::abs(b.residual);
                       return ra != rb ? ra < rb : a.data < b.data;
                     });
    matches.resize(keep);
    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) { return a.data < b.data; });
  }
  if (matches.size() < 6) throw Error(ErrorCode::kNoCorrespondences, "too few ICP correspondences survive");
  double sum = 0.0;
  for (const auto& m : matches) sum += m.residual * m.residual;
  rms = std::sqrt(sum / static_cast<double>(matches.size()));
  return matches;
}

/// Linearized point-to-plane step: minimizes sum (n.(p + w x p + t - q))^2.
RigidTransform solve_step(const std::vector<Point3>& moved, const PointCloud& scene, const std::vector<Match>& matches) {
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
  Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
  for (const auto& m : matches) {
    const Eigen::Vector3d& n = scene.normals[m.scene];
    Eigen::Matrix<double, 6, 1> j;
    j << moved[m.data].cross(n), n;
    a += j * j.transpose();
    b -= j * m.residual;
  }
  // Pseudo-inverse so unconstrained directions (e.g. sliding along two planes) stay put.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(a);
  const auto& lambda = eig.eigenvalues();
  const double cutoff = 1e-9 * std::max(lambda(5), 1e-300);
  Eigen::Matrix<double, 6, 1> x = Eigen::Matrix<double, 6, 1>::Zero();
  for (int k = 0; k < 6; ++k) {
    if (lambda(k) > cutoff) {
      const auto v = eig.eigenvectors().col(k);
      x += v * (v.dot(b) / lambda(k));
    }
  }
  return RigidTransform::orthonormalized(rodrigues(x.head<3>()), x.tail<3>());
}

}  // namespace

IcpResult icp_point_to_plane(const PointCloud& data, const PointCloud& scene, const IcpOptions& opts,
                             const RigidTransform& initial) {
  opts.validate();
  if (data.empty() || scene.empty()) throw Error(ErrorCode::kEmptyInput, "ICP needs non-empty clouds");
  if (!scene.has_normals()) throw Error(ErrorCode::kInvalidArgument, "ICP scene needs normals");
  scene.validate();

  const KdTree tree(scene.points);
  std::vector<bool> data_boundary, scene_boundary;
  if (opts.use_boundaries) {
    if (data.size() > opts.boundary_k) data_boundary = detect_boundaries(data, opts.boundary_k, opts.boundary_gap_deg);
    if (scene.size() > opts.boundary_k) {
      scene_boundary = detect_boundaries(scene, opts.boundary_k, opts.boundary_gap_deg);
    }
  }

  IcpResult result;
  result.transform = initial;
  std::vector<Point3> moved(data.size());
  double previous = std::numeric_limits<double>::infinity();
  RigidTransform accepted = initial;

  for (std::size_t iter = 0; iter < opts.max_iterations; ++iter) {
    result.iterations = iter + 1;
    simd::transform_points(data.points, result.transform.rotation(), result.transform.translation(), moved);
    double rms = 0.0;
    const auto matches = correspond(moved, scene, tree, data_boundary, scene_boundary, opts.rejection_fraction, rms);
    if (rms > previous) {
      // The last step made things worse: keep the previous estimate.
      result.transform = accepted;
      result.converged = true;
      break;
    }
    result.rms_trace.push_back(rms);
    accepted = result.transform;
    if (rms <= 1e-12 || previous - rms < opts.convergence_delta) {
      result.converged = true;
      break;
    }
    previous = rms;
    result.transform = solve_step(moved, scene, matches) * result.transform;
  }
  if (!result.converged) result.transform = accepted;
  return result;
}

IcpSequenceResult icp_register_sequence(std::span<const PointCloud> views, const IcpOptions& opts) {
  if (views.size() < 2) throw Error(ErrorCode::kInvalidArgument, "ICP sequence needs at least two views");
  IcpSequenceResult out;
  out.transforms.push_back(RigidTransform::identity());
  for (std::size_t i = 1; i < views.size(); ++i) {
    const IcpResult r = icp_point_to_plane(views[i], views[i - 1], opts);
    out.converged = out.converged && r.converged;
    out.transforms.push_back(out.transforms.back() * r.transform);
  }
  return out;
}

}  // namespace mumar
