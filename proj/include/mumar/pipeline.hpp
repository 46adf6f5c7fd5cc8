#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mumar/correspondence.hpp"
#include "mumar/dataset.hpp"
#include "mumar/evaluation.hpp"
#include "mumar/registration.hpp"

namespace mumar {

/// One captured view: pre-segmented marker clouds plus the object cloud, all
/// in the view's own frame.
struct ViewData {
  std::vector<PointCloud> marker_clouds;
  PointCloud object_cloud;
  Point3 viewpoint = Point3::Zero();
  std::optional<RigidTransform> ground_truth;
};

ViewData from_synthetic(const SyntheticView& view);
std::vector<ViewData> synthesize(const SceneSpec& spec);

/// Applies t to every cloud, the viewpoint, and conjugates the ground truth
/// (ground truth becomes t * gt * t^-1).
ViewData transform_view(const ViewData& view, const RigidTransform& t);

/// Normals toward the viewpoint, then plane detection per marker; planes of
/// all markers concatenated. Markers with too few points are skipped.
/// Detection failures are rethrown naming the view and marker.
ViewPlanes detect_view_planes(const ViewData& view, std::size_t view_index, const MarkerConstraints& constraints,
                              std::size_t normal_k, std::uint64_t seed, const RansacParams& ransac = {});

struct PipelineResult {
  std::vector<RigidTransform> transforms;
  PointCloud merged_object;
  std::optional<RegistrationReport> report;  // set by the mumar backend
  bool converged = true;
};

PipelineResult run_mumar(const std::vector<ViewData>& views, const RunConfig& config);
PipelineResult run_icp(const std::vector<ViewData>& views, const RunConfig& config);
PipelineResult run_backend(const std::vector<ViewData>& views, const RunConfig& config);

/// Fine-aligns merged onto the mesh (when requested), then measures it.
DistanceStats evaluate_against(const PointCloud& merged, const TriangleMesh& reference, bool align = true);

/// Per-view rotation (degrees) and translation errors of estimated against true transforms.
struct PoseErrors {
  std::vector<double> rotation_deg;
  std::vector<double> translation;
  double max_rotation() const;
  double max_translation() const;
};
PoseErrors pose_errors(std::span<const RigidTransform> estimated, std::span<const RigidTransform> truth);

// On-disk layout: manifest.json, views/view_NNN_marker_M.ply,
// views/view_NNN_object.ply, ground_truth/view_NNN.txt, reference_object.ply.
void write_dataset(const std::filesystem::path& dir, const std::vector<ViewData>& views,
                   const std::optional<TriangleMesh>& reference);
std::vector<ViewData> load_dataset(const std::filesystem::path& dir, ViewManifest* manifest = nullptr);

/// Writes transforms/view_NNN.txt, merged_object.ply, report.json and error_trace.csv.
void write_registration_outputs(const std::filesystem::path& dir, const PipelineResult& result);
std::string report_json(const PipelineResult& result);
std::string error_trace_csv(const RegistrationReport& report);

struct BenchmarkSettings {
  std::vector<Shape> objects{Shape::kCube, Shape::kPyramid, Shape::kDoublePyramid};
  std::vector<double> sigmas{0.0, 0.002, 0.005};  // fractions of the marker edge
  std::uint64_t seed = 1;
  RunConfig base;
};

BenchmarkReport run_benchmark(const BenchmarkSettings& settings);

}  // namespace mumar
