#include "mumar/dataset.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mumar/error.hpp"

namespace mumar {

using nlohmann::json;

std::string_view to_string(Backend backend) { return backend == Backend::kMumar ? "mumar" : "icp"; }

Backend backend_from_string(std::string_view name) {
  if (name == "mumar") return Backend::kMumar;
  if (name == "icp") return Backend::kIcp;
  throw Error(ErrorCode::kParse, "unknown backend '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  if (scene.has_value() == input_dir.has_value()) {
    throw Error(ErrorCode::kInvalidArgument, "exactly one of scene and input_dir must be set");
  }
  if (scene) scene->validate();
  constraints.validate();
  registration.validate();
  icp.validate();
  if (normal_k < 3) throw Error(ErrorCode::kInvalidArgument, "normal_k must be >= 3");
  if (ransac.sample_size < 3 || ransac.max_restarts < 1 || ransac.cluster_attempts < 1) {
    throw Error(ErrorCode::kInvalidArgument, "ransac sample_size must be >= 3, max_restarts and cluster_attempts >= 1");
  }
}

void ViewManifest::validate() const {
  if (views.empty()) throw Error(ErrorCode::kParse, "manifest has no views");
  const std::size_t markers = views.front().markers.size();
  const bool gt = views.front().ground_truth.has_value();
  for (const auto& v : views) {
    if (v.markers.size() != markers) throw Error(ErrorCode::kParse, "views differ in marker count");
    if (v.ground_truth.has_value() != gt) throw Error(ErrorCode::kParse, "ground truth present for only some views");
    if (v.object.empty()) throw Error(ErrorCode::kParse, "view without an object cloud");
  }
}

namespace {

template <typename T>
T get(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("key '") + key + "': " + e.what());
  }
}

json parse(const std::string& text) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::kParse, "top-level JSON value must be an object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, e.what());
  }
}

json vec_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec_from(const json& j, const char* key, const Eigen::Vector3d& fallback) {
  const auto v = get<std::vector<double>>(j, key, {fallback.x(), fallback.y(), fallback.z()});
  if (v.size() != 3) throw Error(ErrorCode::kParse, std::string("key '") + key + "' must hold 3 numbers");
  return {v[0], v[1], v[2]};
}

json transform_json(const RigidTransform& t) {
  const Eigen::Matrix4d m = t.matrix();
  json rows = json::array();
  for (int r = 0; r < 4; ++r) rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2), m(r, 3)}));
  return rows;
}

RigidTransform transform_from(const json& j, const char* key) {
  if (!j.contains(key)) return RigidTransform::identity();
  const auto rows = get<std::vector<std::vector<double>>>(j, key, {});
  if (rows.size() != 4) throw Error(ErrorCode::kParse, std::string("key '") + key + "' must be a 4x4 matrix");
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    if (rows[r].size() != 4) throw Error(ErrorCode::kParse, std::string("key '") + key + "' must be a 4x4 matrix");
    for (int c = 0; c < 4; ++c) m(r, c) = rows[r][c];
  }
  try {
    return RigidTransform::from_matrix(m);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("key '") + key + "': " + e.what());
  }
}

json placement_json(const Placement& p) {
  return {{"shape", std::string(to_string(p.shape))}, {"size", p.size}, {"pose", transform_json(p.pose)}};
}

Placement placement_from(const json& j) {
  Placement p;
  p.shape = shape_from_string(get<std::string>(j, "shape", "cube"));
  p.size = get<double>(j, "size", 1.0);
  p.pose = transform_from(j, "pose");
  return p;
}

json constraints_json(const MarkerConstraints& c) {
  return {{"max_visible_planes", c.max_visible_planes},
          {"pairwise_angles", c.pairwise_angles},
          {"angle_tolerance", c.angle_tolerance},
          {"inlier_distance", c.inlier_distance},
          {"cluster_overshoot", c.cluster_overshoot}};
}

MarkerConstraints constraints_from(const json& j) {
  MarkerConstraints c;
  c.max_visible_planes = get<std::size_t>(j, "max_visible_planes", c.max_visible_planes);
  c.pairwise_angles = get<std::vector<double>>(j, "pairwise_angles", c.pairwise_angles);
  c.angle_tolerance = get<double>(j, "angle_tolerance", c.angle_tolerance);
  c.inlier_distance = get<double>(j, "inlier_distance", c.inlier_distance);
  c.cluster_overshoot = get<double>(j, "cluster_overshoot", c.cluster_overshoot);
  c.validate();
  return c;
}

json scene_json(const SceneSpec& s) {
  json markers = json::array();
  for (const auto& m : s.markers) markers.push_back(placement_json(m));
  return {{"markers", markers},
          {"object", placement_json(s.object)},
          {"camera", vec_json(s.camera)},
          {"n_views", s.n_views},
          {"step_deg", s.step_deg},
          {"turntable_axis", vec_json(s.turntable_axis)},
          {"slide_per_view", vec_json(s.slide_per_view)},
          {"density", s.density},
          {"noise_sigma", s.noise_sigma},
          {"noise_model", s.noise_model == NoiseModel::kRay ? "ray" : "isotropic"},
          {"seed", s.seed}};
}

SceneSpec scene_from(const json& j) {
  SceneSpec s = default_benchmark_scene(Shape::kCube);
  if (j.contains("markers")) {
    s.markers.clear();
    for (const auto& m : j.at("markers")) s.markers.push_back(placement_from(m));
  }
  if (j.contains("object")) s.object = placement_from(j.at("object"));
  s.camera = vec_from(j, "camera", s.camera);
  s.n_views = get<std::size_t>(j, "n_views", s.n_views);
  s.step_deg = get<double>(j, "step_deg", s.step_deg);
  s.turntable_axis = vec_from(j, "turntable_axis", s.turntable_axis);
  s.slide_per_view = vec_from(j, "slide_per_view", s.slide_per_view);
  s.density = get<double>(j, "density", s.density);
  s.noise_sigma = get<double>(j, "noise_sigma", s.noise_sigma);
  const auto model = get<std::string>(j, "noise_model", "ray");
  if (model != "ray" && model != "isotropic") throw Error(ErrorCode::kParse, "noise_model must be ray or isotropic");
  s.noise_model = model == "ray" ? NoiseModel::kRay : NoiseModel::kIsotropic;
  s.seed = get<std::uint64_t>(j, "seed", s.seed);
  s.validate();
  return s;
}

}  // namespace

std::string to_json(const MarkerConstraints& constraints) { return constraints_json(constraints).dump(2) + "\n"; }

MarkerConstraints constraints_from_json(const std::string& text) { return constraints_from(parse(text)); }

std::string to_json(const SceneSpec& spec) { return scene_json(spec).dump(2) + "\n"; }

SceneSpec scene_spec_from_json(const std::string& text) { return scene_from(parse(text)); }

std::string to_json(const RunConfig& c) {
  json j;
  if (c.scene) j["scene"] = scene_json(*c.scene);
  if (c.input_dir) j["input_dir"] = c.input_dir->generic_string();
  j["constraints"] = constraints_json(c.constraints);
  j["ransac"] = {{"sample_size", c.ransac.sample_size},
                 {"max_restarts", c.ransac.max_restarts},
                 {"cluster_attempts", c.ransac.cluster_attempts}};
  j["normal_k"] = c.normal_k;
  const auto& r = c.registration;
  j["registration"] = {{"window", r.window},
                       {"max_iters", r.max_iters},
                       {"rot_tol", r.rot_tol},
                       {"trans_tol", r.trans_tol},
                       {"pairwise_init", r.pairwise_init},
                       {"icp_fallback", r.icp_fallback},
                       {"scene_adjust", r.scene_adjust},
                       {"max_normal_angle", r.gates.max_normal_angle},
                       {"max_centroid_dist", r.gates.max_centroid_dist},
                       {"lookback", r.lookback},
                       {"translation_rule",
                        r.translation_rule == TranslationRule::kLeastSquares ? "least_squares" : "projection_mean"},
                       {"fallback_rejection", r.fallback_rejection}};
  j["icp"] = {{"max_iterations", c.icp.max_iterations},
              {"rejection_fraction", c.icp.rejection_fraction},
              {"convergence_delta", c.icp.convergence_delta},
              {"use_boundaries", c.icp.use_boundaries},
              {"boundary_k", c.icp.boundary_k},
              {"boundary_gap_deg", c.icp.boundary_gap_deg}};
  j["backend"] = std::string(to_string(c.backend));
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir.generic_string();
  return j.dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  const json j = parse(text);
  RunConfig c;
  if (j.contains("scene")) c.scene = scene_from(j.at("scene"));
  if (j.contains("input_dir")) c.input_dir = get<std::string>(j, "input_dir", "");
  if (j.contains("constraints")) c.constraints = constraints_from(j.at("constraints"));
  if (j.contains("ransac")) {
    const json& r = j.at("ransac");
    c.ransac.sample_size = get<std::size_t>(r, "sample_size", c.ransac.sample_size);
    c.ransac.max_restarts = get<std::size_t>(r, "max_restarts", c.ransac.max_restarts);
    c.ransac.cluster_attempts = get<std::size_t>(r, "cluster_attempts", c.ransac.cluster_attempts);
  }
  c.normal_k = get<std::size_t>(j, "normal_k", c.normal_k);
  if (j.contains("registration")) {
    const json& r = j.at("registration");
    auto& o = c.registration;
    o.window = get<std::size_t>(r, "window", o.window);
    o.max_iters = get<std::size_t>(r, "max_iters", o.max_iters);
    o.rot_tol = get<double>(r, "rot_tol", o.rot_tol);
    o.trans_tol = get<double>(r, "trans_tol", o.trans_tol);
    o.pairwise_init = get<bool>(r, "pairwise_init", o.pairwise_init);
    o.icp_fallback = get<bool>(r, "icp_fallback", o.icp_fallback);
    o.scene_adjust = get<bool>(r, "scene_adjust", o.scene_adjust);
    o.gates.max_normal_angle = get<double>(r, "max_normal_angle", o.gates.max_normal_angle);
    o.gates.max_centroid_dist = get<double>(r, "max_centroid_dist", o.gates.max_centroid_dist);
    o.lookback = get<std::size_t>(r, "lookback", o.lookback);
    const auto rule = get<std::string>(r, "translation_rule", "least_squares");
    if (rule == "least_squares") {
      o.translation_rule = TranslationRule::kLeastSquares;
    } else if (rule == "projection_mean") {
      o.translation_rule = TranslationRule::kProjectionMean;
    } else {
      throw Error(ErrorCode::kParse, "translation_rule must be least_squares or projection_mean");
    }
    o.fallback_rejection = get<double>(r, "fallback_rejection", o.fallback_rejection);
  }
  if (j.contains("icp")) {
    const json& r = j.at("icp");
    auto& o = c.icp;
    o.max_iterations = get<std::size_t>(r, "max_iterations", o.max_iterations);
    o.rejection_fraction = get<double>(r, "rejection_fraction", o.rejection_fraction);
    o.convergence_delta = get<double>(r, "convergence_delta", o.convergence_delta);
    o.use_boundaries = get<bool>(r, "use_boundaries", o.use_boundaries);
    o.boundary_k = get<std::size_t>(r, "boundary_k", o.boundary_k);
    o.boundary_gap_deg = get<double>(r, "boundary_gap_deg", o.boundary_gap_deg);
  }
  c.backend = backend_from_string(get<std::string>(j, "backend", "mumar"));
  c.seed = get<std::uint64_t>(j, "seed", c.seed);
  c.output_dir = get<std::string>(j, "output_dir", c.output_dir.generic_string());
  return c;
}

std::string to_json(const ViewManifest& manifest) {
  json views = json::array();
  for (const auto& v : manifest.views) {
    json e = {{"markers", v.markers}, {"object", v.object}, {"viewpoint", vec_json(v.viewpoint)}};
    if (v.ground_truth) e["ground_truth"] = *v.ground_truth;
    views.push_back(e);
  }
  json j = {{"views", views}};
  if (manifest.reference_mesh) j["reference_mesh"] = *manifest.reference_mesh;
  return j.dump(2) + "\n";
}

ViewManifest manifest_from_json(const std::string& text) {
  const json j = parse(text);
  if (!j.contains("views") || !j.at("views").is_array()) throw Error(ErrorCode::kParse, "manifest needs a views array");
  ViewManifest m;
  for (const auto& v : j.at("views")) {
    ViewEntry e;
    e.markers = get<std::vector<std::string>>(v, "markers", {});
    e.object = get<std::string>(v, "object", "");
    if (v.contains("ground_truth")) e.ground_truth = get<std::string>(v, "ground_truth", "");
    e.viewpoint = vec_from(v, "viewpoint", Point3::Zero());
    m.views.push_back(std::move(e));
  }
  if (j.contains("reference_mesh")) m.reference_mesh = get<std::string>(j, "reference_mesh", "");
  m.validate();
  return m;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

std::string format_transform(const RigidTransform& t) {
  const Eigen::Matrix4d m = t.matrix();
  std::ostringstream s;
  s.precision(17);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) s << m(r, c) << (c == 3 ? '\n' : ' ');
  }
  return s.str();
}

void write_transform(const std::filesystem::path& path, const RigidTransform& t) {
  write_text(path, format_transform(t));
}

RigidTransform read_transform(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (!(in >> m(r, c))) throw Error(ErrorCode::kParse, "'" + path.string() + "': expected 16 numbers");
    }
  }
  std::string extra;
  if (in >> extra) throw Error(ErrorCode::kParse, "'" + path.string() + "': trailing content");
  try {
    return RigidTransform::from_matrix(m);
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, "'" + path.string() + "': " + e.what());
  }
}

ViewManifest load_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  try {
    return manifest_from_json(read_text(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw Error(ErrorCode::kParse, "'" + path.string() + "': " + e.what());
    throw;
  }
}

void check_manifest_files(const ViewManifest& manifest, const std::filesystem::path& dir) {
  auto need = [&dir](const std::string& rel) {
    if (!std::filesystem::exists(dir / rel)) throw Error(ErrorCode::kIo, "missing file '" + (dir / rel).string() + "'");
  };
  for (const auto& v : manifest.views) {
    for (const auto& m : v.markers) need(m);
    need(v.object);
    if (v.ground_truth) need(*v.ground_truth);
  }
  if (manifest.reference_mesh) need(*manifest.reference_mesh);
}

}  // namespace mumar
