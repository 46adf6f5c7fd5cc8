#include "mumar/normals.hpp"

#include <Eigen/Eigenvalues>

#include "mumar/error.hpp"
#include "mumar/simd.hpp"

namespace mumar {

Eigen::Vector3d least_variance_direction(std::span<const Point3> nbhd) {
  const Point3 shift = nbhd.front();
  const simd::Moments m = simd::accumulate_moments(nbhd, shift);
  const double inv_n = 1.0 / static_cast<double>(nbhd.size());
  const Eigen::Vector3d mean(m[0] * inv_n, m[1] * inv_n, m[2] * inv_n);
  Eigen::Matrix3d cov;
  cov << m[3], m[4], m[5], m[4], m[6], m[7], m[5], m[7], m[8];
  cov = cov * inv_n - mean * mean.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  return eig.eigenvectors().col(0);
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Point3& viewpoint) {
  if (k < 3) throw Error(ErrorCode::kInvalidArgument, "normal estimation needs k >= 3");
  if (cloud.size() <= k) {
    throw Error(ErrorCode::kTooFewPoints, "normal estimation needs more than k points");
  }
  const KdTree tree(cloud.points);
  return estimate_normals(cloud, tree, k, viewpoint);
}

PointCloud estimate_normals(const PointCloud& cloud, const KdTree& tree, std::size_t k,
                            const Point3& viewpoint) {
  if (k < 3) throw Error(ErrorCode::kInvalidArgument, "normal estimation needs k >= 3");
  if (cloud.size() <= k) {
    throw Error(ErrorCode::kTooFewPoints, "normal estimation needs more than k points");
  }
  PointCloud out = cloud;
  out.normals.resize(cloud.size());
  std::vector<Point3> nbhd;
  nbhd.reserve(k + 1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    nbhd.clear();
    for (const auto& nb : tree.knn(p, k + 1)) nbhd.push_back(cloud.points[nb.index]);
    Eigen::Vector3d n = least_variance_direction(nbhd).normalized();
    if (n.dot(viewpoint - p) < 0.0) n = -n;
    out.normals[i] = n;
  }
  return out;
}

}  // namespace mumar
