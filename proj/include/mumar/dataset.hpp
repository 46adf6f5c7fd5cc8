#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mumar/icp.hpp"
#include "mumar/plane_detection.hpp"
#include "mumar/registration.hpp"
#include "mumar/synth.hpp"

namespace mumar {

enum class Backend { kMumar, kIcp };

std::string_view to_string(Backend backend);
Backend backend_from_string(std::string_view name);

struct RunConfig {
  std::optional<SceneSpec> scene;
  std::optional<std::filesystem::path> input_dir;
  MarkerConstraints constraints;
  RansacParams ransac;
  std::size_t normal_k = 16;
  RegistrationOptions registration;
  IcpOptions icp;
  Backend backend = Backend::kMumar;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "mumar_out";

  /// Throws kInvalidArgument on inconsistent settings.
  void validate() const;
};

struct ViewEntry {
  std::vector<std::string> markers;  // paths relative to the manifest
  std::string object;
  std::optional<std::string> ground_truth;
  Point3 viewpoint = Point3::Zero();
};

struct ViewManifest {
  std::vector<ViewEntry> views;
  std::optional<std::string> reference_mesh;

  /// Throws kParse on non-uniform view structure.
  void validate() const;
};

// JSON (de)serialization. Parsers throw kParse with the offending key.
std::string to_json(const RunConfig& config);
RunConfig run_config_from_json(const std::string& text);
std::string to_json(const MarkerConstraints& constraints);
MarkerConstraints constraints_from_json(const std::string& text);
std::string to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const std::string& text);
std::string to_json(const ViewManifest& manifest);
ViewManifest manifest_from_json(const std::string& text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// 4x4 row-major, one row per line, 17 significant digits.
std::string format_transform(const RigidTransform& t);
void write_transform(const std::filesystem::path& path, const RigidTransform& t);
RigidTransform read_transform(const std::filesystem::path& path);

ViewManifest load_manifest(const std::filesystem::path& dir);
/// Missing referenced files raise kIo naming the path.
void check_manifest_files(const ViewManifest& manifest, const std::filesystem::path& dir);

}  // namespace mumar
