#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mumar {

using Point3 = Eigen::Vector3d;

/// Direction with Euclidean norm 1 (within 1e-9).
class UnitVector3 {
 public:
  UnitVector3() : v_(0.0, 0.0, 1.0) {}

  /// Wraps an already unit-length vector; throws kInvalidArgument otherwise.
  explicit UnitVector3(const Eigen::Vector3d& v);

  /// Normalizes any finite non-zero vector.
  static UnitVector3 normalize(const Eigen::Vector3d& v);

  const Eigen::Vector3d& vec() const { return v_; }
  double x() const { return v_.x(); }
  double y() const { return v_.y(); }
  double z() const { return v_.z(); }

  double dot(const UnitVector3& other) const { return v_.dot(other.v_); }
  UnitVector3 operator-() const {
    UnitVector3 u;
    u.v_ = -v_;
    return u;
  }

 private:
  Eigen::Vector3d v_;
};

/// A planar face summary: unit normal plus the centroid of the observed region.
struct PlaneModel {
  UnitVector3 normal;
  Point3 centroid = Point3::Zero();

  double signed_distance(const Point3& p) const { return (p - centroid).dot(normal.vec()); }
};

class RigidTransform {
 public:
  RigidTransform() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

  /// Throws kInvalidArgument unless rotation is orthonormal with det +1 (1e-9).
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Eigen::Vector3d& t);
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double radians,
                                        const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());
  /// Projects an approximately orthonormal matrix onto SO(3) first.
  static RigidTransform orthonormalized(const Eigen::Matrix3d& approx_rotation,
                                        const Eigen::Vector3d& translation);
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  Point3 apply(const Point3& p) const { return rotation_ * p + translation_; }
  UnitVector3 rotate(const UnitVector3& n) const;
  PlaneModel apply(const PlaneModel& plane) const;

  RigidTransform inverse() const;
  /// Rotation angle in degrees, [0, 180].
  double rotation_angle_deg() const;

  /// (a * b)(p) == a(b(p))
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) { return a * b; }
inline RigidTransform inverse(const RigidTransform& t) { return t.inverse(); }

/// Deviation of R from SO(3): max(|R^T R - I|_max, |det R - 1|).
double orthonormality_error(const Eigen::Matrix3d& r);

struct PointCloud {
  std::vector<Point3> points;
  std::vector<Eigen::Vector3d> normals;  // empty, or one unit vector per point
  std::vector<int> labels;               // empty, or one label per point

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty(); }
  bool has_labels() const { return !labels.empty(); }

  /// Throws kLengthMismatch / kInvalidArgument on broken invariants.
  void validate() const;
  void append(const PointCloud& other);
};

/// Angle between two directions in degrees, [0, 180].
double angle_between(const UnitVector3& u, const UnitVector3& v);

/// Least-squares plane: centroid is the mean, normal the least-variance
/// direction. Throws kDegenerateSet for (near) collinear input and
/// kTooFewPoints below three points.
PlaneModel fit_plane(std::span<const Point3> points);

struct RotationEstimate {
  RigidTransform transform;    // translation is zero
  bool rank_deficient = false; // all normals parallel: spin about the axis is unconstrained
};

/// Orthogonal Procrustes (Kabsch) on paired normals: minimizes sum |R d_i - s_i|^2.
RotationEstimate rotation_from_normals(std::span<const UnitVector3> data_normals,
                                       std::span<const UnitVector3> scene_normals);

Point3 project_onto_plane(const Point3& point, const PlaneModel& plane);

PointCloud apply_transform(const RigidTransform& t, const PointCloud& cloud);

constexpr double kPi = 3.14159265358979323846;
constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace mumar
