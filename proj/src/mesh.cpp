#include "mumar/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "mumar/error.hpp"

namespace mumar {

std::size_t TriangleMesh::face_count() const {
  return std::set<int>(face_ids.begin(), face_ids.end()).size();
}

double TriangleMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles.at(t);
  const Point3& a = vertices[tri[0]];
  return 0.5 * (vertices[tri[1]] - a).cross(vertices[tri[2]] - a).norm();
}

double TriangleMesh::surface_area() const {
  double sum = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) sum += triangle_area(t);
  return sum;
}

Eigen::Vector3d TriangleMesh::triangle_normal(std::size_t t) const {
  const auto& tri = triangles.at(t);
  const Point3& a = vertices[tri[0]];
  return (vertices[tri[1]] - a).cross(vertices[tri[2]] - a).normalized();
}

void TriangleMesh::transform(const RigidTransform& t) {
  for (auto& v : vertices) v = t.apply(v);
}

TriangleMesh transformed(const TriangleMesh& mesh, const RigidTransform& t) {
  TriangleMesh out = mesh;
  out.transform(t);
  return out;
}

Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
  // Voronoi-region walk over vertices, edges and the face.
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

double squared_distance_to_mesh(const Point3& p, const TriangleMesh& mesh) {
  if (mesh.triangles.empty()) throw Error(ErrorCode::kEmptyInput, "mesh has no triangles");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& tri : mesh.triangles) {
    const Point3 q = closest_point_on_triangle(p, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
    best = std::min(best, (p - q).squaredNorm());
  }
  return best;
}

std::optional<double> ray_triangle(const Point3& origin, const Eigen::Vector3d& dir, const Point3& a,
                                   const Point3& b, const Point3& c) {
  const Eigen::Vector3d e1 = b - a, e2 = c - a;
  const Eigen::Vector3d h = dir.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < 1e-14) return std::nullopt;
  const double inv = 1.0 / det;
  const Eigen::Vector3d s = origin - a;
  const double u = inv * s.dot(h);
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Eigen::Vector3d q = s.cross(e1);
  const double v = inv * dir.dot(q);
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  return inv * e2.dot(q);
}

PointCloud sample_mesh(const TriangleMesh& mesh, double density, std::uint64_t seed) {
  if (!(density > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sampling density must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud out;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Point3& a = mesh.vertices[tri[0]];
    const Point3& b = mesh.vertices[tri[1]];
    const Point3& c = mesh.vertices[tri[2]];
    const Eigen::Vector3d n = mesh.triangle_normal(t);
    const auto count = static_cast<std::size_t>(std::floor(mesh.triangle_area(t) * density + unit(rng)));
    for (std::size_t i = 0; i < count; ++i) {
      const double r1 = std::sqrt(unit(rng));
      const double r2 = unit(rng);
      out.points.push_back(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
      out.normals.push_back(n);
      out.labels.push_back(mesh.face_ids[t]);
    }
  }
  return out;
}

}  // namespace mumar
