#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mumar/geometry.hpp"

namespace mumar {

/// Triangle soup with one face id per triangle; triangles wind counter-clockwise
/// seen from outside.
struct TriangleMesh {
  std::vector<Point3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> face_ids;

  std::size_t face_count() const;
  double surface_area() const;
  /// Unit outward normal of triangle t.
  Eigen::Vector3d triangle_normal(std::size_t t) const;
  double triangle_area(std::size_t t) const;
  void transform(const RigidTransform& t);
};

TriangleMesh transformed(const TriangleMesh& mesh, const RigidTransform& t);

/// Closest point on triangle (a, b, c) to p.
Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c);

/// Squared distance from p to the nearest triangle, brute force over all triangles.
double squared_distance_to_mesh(const Point3& p, const TriangleMesh& mesh);

/// Ray p = origin + s * dir against triangle; returns s when hit (Moller-Trumbore).
std::optional<double> ray_triangle(const Point3& origin, const Eigen::Vector3d& dir, const Point3& a,
                                   const Point3& b, const Point3& c);

/// Uniform-area samples on every triangle (about area * density each) with
/// triangle normals and face ids as labels.
PointCloud sample_mesh(const TriangleMesh& mesh, double density, std::uint64_t seed);

}  // namespace mumar
