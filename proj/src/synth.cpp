#include "mumar/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mumar/error.hpp"

namespace mumar {

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::kCube:
      return "cube";
    case Shape::kPyramid:
      return "pyramid";
    case Shape::kDoublePyramid:
      return "double_pyramid";
  }
  return "unknown";
}

Shape shape_from_string(std::string_view name) {
  if (name == "cube") return Shape::kCube;
  if (name == "pyramid") return Shape::kPyramid;
  if (name == "double_pyramid") return Shape::kDoublePyramid;
  throw Error(ErrorCode::kParse, "unknown shape '" + std::string(name) + "'");
}

namespace {

class MeshBuilder {
 public:
  int vertex(const Point3& p) {
    mesh_.vertices.push_back(p);
    return static_cast<int>(mesh_.vertices.size() - 1);
  }

  /// Adds triangle (a, b, c) wound so its normal points away from inside.
  void triangle(int a, int b, int c, int face, const Point3& inside) {
    const auto& v = mesh_.vertices;
    const Eigen::Vector3d n = (v[b] - v[a]).cross(v[c] - v[a]);
    if (n.dot(v[a] - inside) < 0.0) std::swap(b, c);
    mesh_.triangles.push_back({a, b, c});
    mesh_.face_ids.push_back(face);
  }

  void quad(int a, int b, int c, int d, int face, const Point3& inside) {
    triangle(a, b, c, face, inside);
    triangle(a, c, d, face, inside);
  }

  /// Square base at z = base_z, apex at apex_z; side ids start at first_face.
  void pyramid(double size, double base_z, double apex_z, int first_face, int base_face) {
    const double h = 0.5 * size;
    const int apex = vertex(Point3(0.0, 0.0, apex_z));
    const int c[4] = {vertex(Point3(-h, -h, base_z)), vertex(Point3(h, -h, base_z)), vertex(Point3(h, h, base_z)),
                      vertex(Point3(-h, h, base_z))};
    const Point3 inside(0.0, 0.0, 0.75 * base_z + 0.25 * apex_z);
    for (int i = 0; i < 4; ++i) triangle(c[i], c[(i + 1) % 4], apex, first_face + i, inside);
    quad(c[0], c[1], c[2], c[3], base_face, inside);
  }

  TriangleMesh take() { return std::move(mesh_); }

 private:
  TriangleMesh mesh_;
};

TriangleMesh cube_mesh(double s) {
  MeshBuilder b;
  const double h = 0.5 * s;
  int v[8];
  for (int i = 0; i < 8; ++i) {
    v[i] = b.vertex(Point3((i & 1) ? h : -h, (i & 2) ? h : -h, (i & 4) ? s : 0.0));
  }
  const Point3 inside(0.0, 0.0, h);
  b.quad(v[0], v[2], v[6], v[4], 0, inside);  // -x
  b.quad(v[1], v[3], v[7], v[5], 1, inside);  // +x
  b.quad(v[0], v[1], v[5], v[4], 2, inside);  // -y
  b.quad(v[2], v[3], v[7], v[6], 3, inside);  // +y
  b.quad(v[0], v[1], v[3], v[2], 4, inside);  // bottom
  b.quad(v[4], v[5], v[7], v[6], 5, inside);  // top
  return b.take();
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b + 0x632be59bd9b4e019ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Bounds {
  Point3 center;
  double radius;
};

Bounds bounds(const TriangleMesh& m) {
  Point3 c = Point3::Zero();
  for (const auto& v : m.vertices) c += v;
  c /= static_cast<double>(m.vertices.size());
  double r = 0.0;
  for (const auto& v : m.vertices) r = std::max(r, (v - c).norm());
  return {c, r};
}

/// Does the open segment from origin to origin + dir come within r of c?
bool segment_near_sphere(const Point3& origin, const Eigen::Vector3d& dir, const Bounds& b) {
  const double len2 = dir.squaredNorm();
  const double s = std::clamp((b.center - origin).dot(dir) / len2, 0.0, 1.0);
  return (origin + s * dir - b.center).squaredNorm() <= b.radius * b.radius;
}

}  // namespace

TriangleMesh generate_mesh(Shape shape, double size) {
  if (!(size > 0.0)) throw Error(ErrorCode::kInvalidArgument, "mesh size must be > 0");
  switch (shape) {
    case Shape::kCube:
      return cube_mesh(size);
    case Shape::kPyramid: {
      MeshBuilder b;
      b.pyramid(size, 0.0, size, 0, 4);
      return b.take();
    }
    case Shape::kDoublePyramid: {
      MeshBuilder b;
      b.pyramid(size, 0.0, size, 0, 8);
      b.pyramid(size, 2.0 * size, size, 4, 9);
      return b.take();
    }
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown shape");
}

void SceneSpec::validate() const {
  if (n_views < 1) throw Error(ErrorCode::kInvalidArgument, "n_views must be >= 1");
  if (!(std::abs(step_deg) * static_cast<double>(n_views) <= 360.0 + 1e-9)) {
    throw Error(ErrorCode::kInvalidArgument, "n_views * step exceeds a full turn");
  }
  if (!(density > 0.0)) throw Error(ErrorCode::kInvalidArgument, "density must be > 0");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be >= 0");
  if (!(object.size > 0.0)) throw Error(ErrorCode::kInvalidArgument, "object size must be > 0");
  for (const auto& m : markers) {
    if (!(m.size > 0.0)) throw Error(ErrorCode::kInvalidArgument, "marker size must be > 0");
  }
  if (!(turntable_axis.norm() > 0.0) || !turntable_axis.allFinite() || !slide_per_view.allFinite() ||
      !camera.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite or zero scene vector");
  }
}

double SceneSpec::marker_edge() const {
  if (markers.empty()) return object.size;
  std::vector<double> sizes;
  for (const auto& m : markers) sizes.push_back(m.size);
  std::sort(sizes.begin(), sizes.end());
  const std::size_t mid = sizes.size() / 2;
  return sizes.size() % 2 ? sizes[mid] : 0.5 * (sizes[mid - 1] + sizes[mid]);
}

double SceneSpec::diameter() const {
  double r = 0.0;
  auto extend = [&r](const Placement& p) {
    for (const auto& v : transformed(generate_mesh(p.shape, p.size), p.pose).vertices) r = std::max(r, v.norm());
  };
  extend(object);
  for (const auto& m : markers) extend(m);
  return 2.0 * r;
}

RigidTransform scene_motion(const SceneSpec& spec, std::size_t view_index) {
  const double k = static_cast<double>(view_index);
  return RigidTransform::from_axis_angle(spec.turntable_axis, deg_to_rad(k * spec.step_deg), k * spec.slide_per_view);
}

SyntheticView render_view(const SceneSpec& spec, std::size_t view_index) {
  spec.validate();
  if (view_index >= spec.n_views) throw Error(ErrorCode::kInvalidArgument, "view index out of range");
  const RigidTransform motion = scene_motion(spec, view_index);

  std::vector<TriangleMesh> meshes;
  for (const auto& m : spec.markers) meshes.push_back(transformed(generate_mesh(m.shape, m.size), motion * m.pose));
  meshes.push_back(transformed(generate_mesh(spec.object.shape, spec.object.size), motion * spec.object.pose));

  struct Facing {
    std::size_t mesh;
    std::size_t tri;
  };
  std::vector<Facing> facing;
  std::vector<Bounds> mesh_bounds;
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    mesh_bounds.push_back(bounds(meshes[m]));
    for (std::size_t t = 0; t < meshes[m].triangles.size(); ++t) {
      const Point3& a = meshes[m].vertices[meshes[m].triangles[t][0]];
      if (meshes[m].triangle_normal(t).dot(spec.camera - a) > 0.0) facing.push_back({m, t});
    }
  }

  auto occluded = [&](const Point3& p, const Facing& self) {
    const Eigen::Vector3d dir = p - spec.camera;
    for (std::size_t m = 0; m < meshes.size(); ++m) {
      if (m != self.mesh && !segment_near_sphere(spec.camera, dir, mesh_bounds[m])) continue;
      for (const auto& f : facing) {
        if (f.mesh != m || (f.mesh == self.mesh && f.tri == self.tri)) continue;
        const auto& tri = meshes[m].triangles[f.tri];
        const auto s = ray_triangle(spec.camera, dir, meshes[m].vertices[tri[0]], meshes[m].vertices[tri[1]],
                                    meshes[m].vertices[tri[2]]);
        if (s && *s > 1e-9 && *s < 1.0 - 1e-9) return true;
      }
    }
    return false;
  };

  std::mt19937_64 rng(mix(spec.seed, 2 * view_index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PointCloud> clouds(meshes.size());
  for (const auto& f : facing) {
    const TriangleMesh& mesh = meshes[f.mesh];
    const auto& tri = mesh.triangles[f.tri];
    const Point3& a = mesh.vertices[tri[0]];
    const Point3& b = mesh.vertices[tri[1]];
    const Point3& c = mesh.vertices[tri[2]];
    const auto count = static_cast<std::size_t>(std::floor(mesh.triangle_area(f.tri) * spec.density + unit(rng)));
    for (std::size_t i = 0; i < count; ++i) {
      const double r1 = std::sqrt(unit(rng));
      const double r2 = unit(rng);
      const Point3 p = a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2);
      if (occluded(p, f)) continue;
      clouds[f.mesh].points.push_back(p);
      clouds[f.mesh].labels.push_back(mesh.face_ids[f.tri]);
    }
  }

  SyntheticView view;
  view.object_cloud = std::move(clouds.back());
  clouds.pop_back();
  view.marker_clouds = std::move(clouds);
  view.ground_truth = motion.inverse();
  view.viewpoint = spec.camera;
  return view;
}

SyntheticView add_noise(const SyntheticView& view, double sigma, std::uint64_t seed, NoiseModel model) {
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be >= 0");
  SyntheticView out = view;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  auto perturb = [&](PointCloud& cloud) {
    for (auto& p : cloud.points) {
      if (model == NoiseModel::kRay) {
        const Eigen::Vector3d ray = (p - view.viewpoint).normalized();
        p += gauss(rng) * ray;
      } else {
        const double x = gauss(rng), y = gauss(rng), z = gauss(rng);
        p += Eigen::Vector3d(x, y, z);
      }
    }
  };
  for (auto& c : out.marker_clouds) perturb(c);
  perturb(out.object_cloud);
  return out;
}

SyntheticView generate_view(const SceneSpec& spec, std::size_t view_index) {
  return add_noise(render_view(spec, view_index), spec.noise_sigma, mix(spec.seed, 2 * view_index + 1),
                   spec.noise_model);
}

SceneSpec default_benchmark_scene(Shape object) {
  SceneSpec spec;
  for (int k = 0; k < 4; ++k) {
    const double a = deg_to_rad(45.0 + 90.0 * k);
    spec.markers.push_back(
        {Shape::kCube, 1.0, RigidTransform::from_translation(Eigen::Vector3d(2.0 * std::cos(a), 2.0 * std::sin(a), 0.0))});
  }
  spec.object = {object, 1.0, RigidTransform::identity()};
  return spec;
}

TriangleMesh object_mesh(const SceneSpec& spec) {
  return transformed(generate_mesh(spec.object.shape, spec.object.size), spec.object.pose);
}

}  // namespace mumar
