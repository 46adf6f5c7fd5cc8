#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mumar/geometry.hpp"
#include "mumar/mesh.hpp"

namespace mumar {

enum class Shape { kCube, kPyramid, kDoublePyramid };

std::string_view to_string(Shape shape);
/// Accepts "cube", "pyramid", "double_pyramid"; throws kParse otherwise.
Shape shape_from_string(std::string_view name);

/// Meshes in their own frame, resting on z = 0 and centred on the z axis.
/// cube: edge size, 6 faces. pyramid: square base size, apex height size,
/// 4 sides + base. double_pyramid: two such pyramids meeting at their apexes
/// (tip at z = size), 8 sides + 2 bases.
TriangleMesh generate_mesh(Shape shape, double size);

struct Placement {
  Shape shape = Shape::kCube;
  double size = 1.0;
  RigidTransform pose;
};

enum class NoiseModel { kRay, kIsotropic };

struct SceneSpec {
  std::vector<Placement> markers;
  Placement object;
  Point3 camera = Point3(0.0, -7.0, 4.0);
  std::size_t n_views = 60;
  double step_deg = 6.0;
  Eigen::Vector3d turntable_axis = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d slide_per_view = Eigen::Vector3d::Zero();  // extra translation per view
  double density = 2000.0;  // points per unit area
  double noise_sigma = 0.0;
  NoiseModel noise_model = NoiseModel::kRay;
  std::uint64_t seed = 1;

  /// Throws kInvalidArgument when the spec is unusable.
  void validate() const;
  /// Median marker size.
  double marker_edge() const;
  /// Diameter of the bounding sphere of every mesh at view 0, about the origin.
  double diameter() const;
};

struct SyntheticView {
  std::vector<PointCloud> marker_clouds;  // labels = face ids
  PointCloud object_cloud;
  RigidTransform ground_truth;  // this view's frame -> common frame (view 0)
  Point3 viewpoint;             // camera position in this view's frame
};

/// Motion applied to the scene at view_index: slide then turntable rotation.
RigidTransform scene_motion(const SceneSpec& spec, std::size_t view_index);

/// Samples the visible surface of every mesh at view_index (back-face culling,
/// then occlusion against every camera-facing triangle). Noise is not added.
SyntheticView render_view(const SceneSpec& spec, std::size_t view_index);

/// Zero-mean Gaussian displacement per point, along the camera ray or isotropic.
SyntheticView add_noise(const SyntheticView& view, double sigma, std::uint64_t seed,
                        NoiseModel model = NoiseModel::kRay);

/// render_view followed by add_noise with the spec's sigma and a per-view seed.
SyntheticView generate_view(const SceneSpec& spec, std::size_t view_index);

/// Four edge-1 cube markers at radius 2 around the object, 60 views of 6 degrees.
SceneSpec default_benchmark_scene(Shape object = Shape::kCube);

/// Object mesh in the common frame.
TriangleMesh object_mesh(const SceneSpec& spec);

}  // namespace mumar
