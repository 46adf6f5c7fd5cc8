#include "mumar/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "mumar/error.hpp"
#include "mumar/simd.hpp"

namespace mumar {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kTooFewPoints:
      return "TooFewPoints";
    case ErrorCode::kDegenerateSet:
      return "DegenerateSet";
    case ErrorCode::kNoClustersSurvive:
      return "NoClustersSurvive";
    case ErrorCode::kConstraintsUnsatisfiable:
      return "ConstraintsUnsatisfiable";
    case ErrorCode::kEmptyScene:
      return "EmptyScene";
    case ErrorCode::kEmptyInput:
      return "EmptyInput";
    case ErrorCode::kNotConverged:
      return "NotConverged";
    case ErrorCode::kNoCorrespondences:
      return "NoCorrespondences";
    case ErrorCode::kLengthMismatch:
      return "LengthMismatch";
    case ErrorCode::kIo:
      return "IoError";
    case ErrorCode::kParse:
      return "ParseError";
  }
  return "Unknown";
}

namespace {

constexpr double kUnitTolerance = 1e-9;
constexpr double kRotationTolerance = 1e-9;
// Compositions re-project onto SO(3) once drift passes this.
constexpr double kRenormalizeThreshold = 1e-12;

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

}  // namespace

UnitVector3::UnitVector3(const Eigen::Vector3d& v) : v_(v) {
  if (!v.allFinite() || std::abs(v.norm() - 1.0) > kUnitTolerance) {
    throw Error(ErrorCode::kInvalidArgument, "vector is not unit length");
  }
}

UnitVector3 UnitVector3::normalize(const Eigen::Vector3d& v) {
  const double n = v.norm();
  if (!std::isfinite(n) || n == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot normalize a zero or non-finite vector");
  }
  UnitVector3 u;
  u.v_ = v / n;
  return u;
}

double orthonormality_error(const Eigen::Matrix3d& r) {
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(r.determinant() - 1.0));
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite transform");
  }
  if (orthonormality_error(rotation) > kRotationTolerance) {
    throw Error(ErrorCode::kInvalidArgument, "rotation is not orthonormal with det +1");
  }
}

RigidTransform RigidTransform::from_translation(const Eigen::Vector3d& t) {
  return RigidTransform(Eigen::Matrix3d::Identity(), t);
}

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis, double radians,
                                               const Eigen::Vector3d& translation) {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix();
  return orthonormalized(r, translation);
}

RigidTransform RigidTransform::orthonormalized(const Eigen::Matrix3d& approx_rotation,
                                               const Eigen::Vector3d& translation) {
  return RigidTransform(nearest_rotation(approx_rotation), translation);
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  const Eigen::RowVector4d last = m.row(3);
  if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::kInvalidArgument, "last row of a rigid 4x4 must be 0 0 0 1");
  }
  return RigidTransform(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

UnitVector3 RigidTransform::rotate(const UnitVector3& n) const {
  return UnitVector3::normalize(rotation_ * n.vec());
}

PlaneModel RigidTransform::apply(const PlaneModel& plane) const {
  return PlaneModel{rotate(plane.normal), apply(plane.centroid)};
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

double RigidTransform::rotation_angle_deg() const {
  const double c = std::clamp((rotation_.trace() - 1.0) / 2.0, -1.0, 1.0);
  return rad_to_deg(std::acos(c));
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation_ = a.rotation_ * b.rotation_;
  out.translation_ = a.rotation_ * b.translation_ + a.translation_;
  if (orthonormality_error(out.rotation_) > kRenormalizeThreshold) {
    out.rotation_ = nearest_rotation(out.rotation_);
  }
  return out;
}

void PointCloud::validate() const {
  if (has_normals() && normals.size() != points.size()) {
    throw Error(ErrorCode::kLengthMismatch, "normals count " + std::to_string(normals.size()) +
                                                " != points count " + std::to_string(points.size()));
  }
  if (has_labels() && labels.size() != points.size()) {
    throw Error(ErrorCode::kLengthMismatch, "labels count " + std::to_string(labels.size()) +
                                                " != points count " + std::to_string(points.size()));
  }
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::kInvalidArgument, "non-finite point coordinate");
  }
  for (const auto& n : normals) {
    if (!n.allFinite() || std::abs(n.norm() - 1.0) > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument, "normal is not unit length");
    }
  }
}

void PointCloud::append(const PointCloud& other) {
  const bool keep_normals = (empty() || has_normals()) && other.has_normals();
  const bool keep_labels = (empty() || has_labels()) && other.has_labels();
  if (!keep_normals) normals.clear();
  if (!keep_labels) labels.clear();
  points.insert(points.end(), other.points.begin(), other.points.end());
  if (keep_normals) normals.insert(normals.end(), other.normals.begin(), other.normals.end());
  if (keep_labels) labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

double angle_between(const UnitVector3& u, const UnitVector3& v) {
  // atan2 keeps precision near 0 and 180 degrees, where acos(dot) does not.
  const double s = u.vec().cross(v.vec()).norm();
  const double c = u.dot(v);
  return rad_to_deg(std::atan2(s, c));
}

PlaneModel fit_plane(std::span<const Point3> points) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::kTooFewPoints, "plane fit needs at least 3 points");

  const Point3 shift = points.front();
  const simd::Moments m = simd::accumulate_moments(points, shift);
  const double inv_n = 1.0 / static_cast<double>(n);
  const Eigen::Vector3d mean_offset(m[0] * inv_n, m[1] * inv_n, m[2] * inv_n);
  Eigen::Matrix3d cov;
  cov << m[3], m[4], m[5], m[4], m[6], m[7], m[5], m[7], m[8];
  cov = cov * inv_n - mean_offset * mean_offset.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Vector3d lambda = eig.eigenvalues();  // ascending
  const double largest = lambda(2);
  if (!(largest > 0.0) || lambda(1) <= 1e-10 * largest) {
    throw Error(ErrorCode::kDegenerateSet, "points are collinear or coincident");
  }

  Eigen::Vector3d normal = eig.eigenvectors().col(0);
  // Canonical sign (largest component positive) so the fit is deterministic.
  Eigen::Index dominant = 0;
  normal.cwiseAbs().maxCoeff(&dominant);
  if (normal(dominant) < 0.0) normal = -normal;
  return PlaneModel{UnitVector3::normalize(normal), shift + mean_offset};
}

RotationEstimate rotation_from_normals(std::span<const UnitVector3> data_normals,
                                       std::span<const UnitVector3> scene_normals) {
  if (data_normals.size() != scene_normals.size()) {
    throw Error(ErrorCode::kLengthMismatch, "normal lists differ in length");
  }
  if (data_normals.empty()) throw Error(ErrorCode::kEmptyInput, "no normal pairs");

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < data_normals.size(); ++i) {
    h += data_normals[i].vec() * scene_normals[i].vec().transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sigma = svd.singularValues();

  if (sigma(1) <= 1e-9 * sigma(0)) {
    // All normals parallel: rotate the mean data direction onto the mean
    // scene direction by the smallest angle.
    Eigen::Vector3d d = Eigen::Vector3d::Zero();
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    const Eigen::Vector3d ref = data_normals.front().vec();
    for (std::size_t i = 0; i < data_normals.size(); ++i) {
      const double sign = data_normals[i].vec().dot(ref) < 0.0 ? -1.0 : 1.0;
      d += sign * data_normals[i].vec();
      s += sign * scene_normals[i].vec();
    }
    const Eigen::Matrix3d r =
        Eigen::Quaterniond::FromTwoVectors(d.normalized(), s.normalized()).toRotationMatrix();
    return {RigidTransform::orthonormalized(r, Eigen::Vector3d::Zero()), true};
  }

  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  const Eigen::Matrix3d r = v * d * u.transpose();
  return {RigidTransform::orthonormalized(r, Eigen::Vector3d::Zero()), false};
}

Point3 project_onto_plane(const Point3& point, const PlaneModel& plane) {
  return point - plane.signed_distance(point) * plane.normal.vec();
}

PointCloud apply_transform(const RigidTransform& t, const PointCloud& cloud) {
  PointCloud out = cloud;
  simd::transform_points(cloud.points, t.rotation(), t.translation(), out.points);
  if (cloud.has_normals()) {
    simd::transform_points(cloud.normals, t.rotation(), Eigen::Vector3d::Zero(), out.normals);
  }
  return out;
}

}  // namespace mumar
