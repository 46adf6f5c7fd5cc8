#include "mumar/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "mumar/error.hpp"
#include "mumar/icp.hpp"
#include "mumar/normals.hpp"
#include "mumar/ply.hpp"

namespace mumar {

namespace fs = std::filesystem;

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string view_name(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view_%03zu", v);
  return buf;
}

}  // namespace

ViewData from_synthetic(const SyntheticView& view) {
  return {view.marker_clouds, view.object_cloud, view.viewpoint, view.ground_truth};
}

std::vector<ViewData> synthesize(const SceneSpec& spec) {
  spec.validate();
  std::vector<ViewData> out;
  out.reserve(spec.n_views);
  for (std::size_t v = 0; v < spec.n_views; ++v) out.push_back(from_synthetic(generate_view(spec, v)));
  return out;
}

ViewData transform_view(const ViewData& view, const RigidTransform& t) {
  ViewData out;
  for (const auto& c : view.marker_clouds) out.marker_clouds.push_back(apply_transform(t, c));
  out.object_cloud = apply_transform(t, view.object_cloud);
  out.viewpoint = t.apply(view.viewpoint);
  if (view.ground_truth) out.ground_truth = t * *view.ground_truth * t.inverse();
  return out;
}

ViewPlanes detect_view_planes(const ViewData& view, std::size_t view_index, const MarkerConstraints& constraints,
                              std::size_t normal_k, std::uint64_t seed, const RansacParams& ransac) {
  ViewPlanes out{view_index, {}};
  const std::size_t min_points = std::max({3 * constraints.cluster_count(), normal_k + 1, std::size_t{30}});
  for (std::size_t m = 0; m < view.marker_clouds.size(); ++m) {
    const PointCloud& raw = view.marker_clouds[m];
    if (raw.size() < min_points) continue;
    try {
      const PointCloud cloud = estimate_normals(raw, normal_k, view.viewpoint);
      const auto planes = detect_marker_planes(cloud, constraints, mix_seed(seed, view_index, m), ransac);
      out.planes.insert(out.planes.end(), planes.begin(), planes.end());
    } catch (const Error& e) {
      throw Error(e.code(), "view " + std::to_string(view_index) + " marker " + std::to_string(m) + ": " + e.what());
    }
  }
  return out;
}

PipelineResult run_mumar(const std::vector<ViewData>& views, const RunConfig& config) {
  std::vector<ViewPlanes> planes;
  planes.reserve(views.size());
  for (std::size_t v = 0; v < views.size(); ++v) {
    planes.push_back(detect_view_planes(views[v], v, config.constraints, config.normal_k, config.seed, config.ransac));
  }
  std::vector<PointCloud> clouds;
  if (config.registration.icp_fallback) {
    for (const auto& view : views) {
      PointCloud merged;
      for (const auto& c : view.marker_clouds) merged.append(c);
      clouds.push_back(estimate_normals(merged, config.normal_k, view.viewpoint));
    }
  }
  RegistrationReport report = register_sequence(planes, config.registration, clouds);

  std::vector<PointCloud> objects;
  for (const auto& v : views) objects.push_back(v.object_cloud);
  PipelineResult result;
  result.transforms = report.transforms;
  result.merged_object = transform_object(objects, result.transforms);
  result.converged = report.converged;
  result.report = std::move(report);
  return result;
}

PipelineResult run_icp(const std::vector<ViewData>& views, const RunConfig& config) {
  std::vector<PointCloud> with_normals;
  std::vector<PointCloud> objects;
  for (const auto& v : views) {
    with_normals.push_back(estimate_normals(v.object_cloud, config.normal_k, v.viewpoint));
    objects.push_back(v.object_cloud);
  }
  const IcpSequenceResult seq = icp_register_sequence(with_normals, config.icp);
  PipelineResult result;
  result.transforms = seq.transforms;
  result.merged_object = transform_object(objects, result.transforms);
  result.converged = seq.converged;
  return result;
}

PipelineResult run_backend(const std::vector<ViewData>& views, const RunConfig& config) {
  return config.backend == Backend::kMumar ? run_mumar(views, config) : run_icp(views, config);
}

DistanceStats evaluate_against(const PointCloud& merged, const TriangleMesh& reference, bool align) {
  if (!align) return directed_distance_stats(merged, reference);
  return directed_distance_stats(fine_align(merged, reference).aligned, reference);
}

double PoseErrors::max_rotation() const {
  return rotation_deg.empty() ? 0.0 : *std::max_element(rotation_deg.begin(), rotation_deg.end());
}

double PoseErrors::max_translation() const {
  return translation.empty() ? 0.0 : *std::max_element(translation.begin(), translation.end());
}

PoseErrors pose_errors(std::span<const RigidTransform> estimated, std::span<const RigidTransform> truth) {
  if (estimated.size() != truth.size()) throw Error(ErrorCode::kLengthMismatch, "pose lists differ in length");
  PoseErrors e;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    e.rotation_deg.push_back((estimated[i] * truth[i].inverse()).rotation_angle_deg());
    e.translation.push_back((estimated[i].translation() - truth[i].translation()).norm());
  }
  return e;
}

void write_dataset(const fs::path& dir, const std::vector<ViewData>& views, const std::optional<TriangleMesh>& reference) {
  std::error_code ec;
  fs::create_directories(dir / "views", ec);
  fs::create_directories(dir / "ground_truth", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  ViewManifest manifest;
  for (std::size_t v = 0; v < views.size(); ++v) {
    ViewEntry e;
    const std::string base = view_name(v);
    for (std::size_t m = 0; m < views[v].marker_clouds.size(); ++m) {
      const std::string rel = "views/" + base + "_marker_" + std::to_string(m) + ".ply";
      write_ply(views[v].marker_clouds[m], dir / rel);
      e.markers.push_back(rel);
    }
    e.object = "views/" + base + "_object.ply";
    write_ply(views[v].object_cloud, dir / e.object);
    if (views[v].ground_truth) {
      e.ground_truth = "ground_truth/" + base + ".txt";
      write_transform(dir / *e.ground_truth, *views[v].ground_truth);
    }
    e.viewpoint = views[v].viewpoint;
    manifest.views.push_back(std::move(e));
  }
  if (reference) {
    manifest.reference_mesh = "reference_object.ply";
    write_ply_mesh(*reference, dir / *manifest.reference_mesh);
  }
  write_text(dir / "manifest.json", to_json(manifest));
}

std::vector<ViewData> load_dataset(const fs::path& dir, ViewManifest* manifest_out) {
  const ViewManifest manifest = load_manifest(dir);
  check_manifest_files(manifest, dir);
  std::vector<ViewData> views;
  for (const auto& e : manifest.views) {
    ViewData v;
    for (const auto& m : e.markers) v.marker_clouds.push_back(read_ply(dir / m));
    v.object_cloud = read_ply(dir / e.object);
    v.viewpoint = e.viewpoint;
    if (e.ground_truth) v.ground_truth = read_transform(dir / *e.ground_truth);
    views.push_back(std::move(v));
  }
  if (manifest_out) *manifest_out = manifest;
  return views;
}

std::string error_trace_csv(const RegistrationReport& report) {
  std::ostringstream s;
  s.precision(17);
  s << "window,first_view,iteration,rot_error_deg,trans_error\n";
  for (std::size_t w = 0; w < report.windows.size(); ++w) {
    const auto& win = report.windows[w];
    const std::size_t first = win.window.empty() ? 0 : win.window.front();
    s << w << ',' << first << ",0," << win.initial.rotation << ',' << win.initial.translation << '\n';
    for (std::size_t i = 0; i < win.trace.size(); ++i) {
      s << w << ',' << first << ',' << i + 1 << ',' << win.trace[i].rotation << ',' << win.trace[i].translation << '\n';
    }
  }
  return s.str();
}

std::string report_json(const PipelineResult& result) {
  using nlohmann::json;
  json j;
  j["converged"] = result.converged;
  json transforms = json::array();
  for (const auto& t : result.transforms) {
    const Eigen::Matrix4d m = t.matrix();
    json rows = json::array();
    for (int r = 0; r < 4; ++r) rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2), m(r, 3)}));
    transforms.push_back(rows);
  }
  j["transforms"] = transforms;
  if (result.report) {
    const auto& rep = *result.report;
    j["backend"] = "mumar";
    j["fallback_icp_used"] = rep.fallback_icp_used;
    j["rank_deficient"] = rep.rank_deficient;
    json windows = json::array();
    for (const auto& w : rep.windows) {
      json trace = json::array();
      for (const auto& e : w.trace) trace.push_back(json::array({e.rotation, e.translation}));
      windows.push_back({{"views", w.window},
                         {"initial", json::array({w.initial.rotation, w.initial.translation})},
                         {"trace", trace},
                         {"converged", w.converged}});
    }
    j["windows"] = windows;
  } else {
    j["backend"] = "icp";
  }
  return j.dump(2) + "\n";
}

void write_registration_outputs(const fs::path& dir, const PipelineResult& result) {
  std::error_code ec;
  fs::create_directories(dir / "transforms", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  for (std::size_t v = 0; v < result.transforms.size(); ++v) {
    write_transform(dir / "transforms" / (view_name(v) + ".txt"), result.transforms[v]);
  }
  write_ply(result.merged_object, dir / "merged_object.ply");
  write_text(dir / "report.json", report_json(result));
  if (result.report) write_text(dir / "error_trace.csv", error_trace_csv(*result.report));
}

BenchmarkReport run_benchmark(const BenchmarkSettings& settings) {
  std::vector<BenchmarkRow> rows;
  for (Shape shape : settings.objects) {
    for (double sigma : settings.sigmas) {
      SceneSpec spec = settings.base.scene ? *settings.base.scene : default_benchmark_scene(shape);
      spec.object.shape = shape;
      spec.noise_sigma = sigma * spec.marker_edge();
      spec.seed = settings.seed;
      const std::vector<ViewData> views = synthesize(spec);
      const TriangleMesh mesh = object_mesh(spec);
      for (Backend backend : {Backend::kMumar, Backend::kIcp}) {
        RunConfig cfg = settings.base;
        cfg.backend = backend;
        cfg.seed = settings.seed;
        const PipelineResult r = run_backend(views, cfg);
        rows.push_back({std::string(to_string(backend)), std::string(to_string(shape)), sigma,
                        evaluate_against(r.merged_object, mesh)});
      }
    }
  }
  return benchmark_report(std::move(rows));
}

}  // namespace mumar
