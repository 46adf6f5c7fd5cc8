#include <fstream>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "mumar/dataset.hpp"
#include "mumar/error.hpp"
#include "mumar/pipeline.hpp"
#include "mumar/ply.hpp"
#include "test_util.hpp"

namespace mumar {
namespace {

using testing::code_of;
using testing::TempDir;

PointCloud labelled_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    c.points.emplace_back(u(rng), u(rng) * 1e-7, u(rng) * 1e5);
    c.normals.push_back(testing::random_unit(rng));
    c.labels.push_back(static_cast<int>(i % 7) - 2);
  }
  return c;
}

void write_raw(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(Ply, RoundTripIsLosslessInBothFormats) {
  const TempDir dir("ply");
  const PointCloud c = labelled_cloud(257, 1);
  for (PlyFormat f : {PlyFormat::kAscii, PlyFormat::kBinaryLittleEndian}) {
    const auto path = dir / (f == PlyFormat::kAscii ? "a.ply" : "b.ply");
    write_ply(c, path, f);
    const PointCloud r = read_ply(path);
    EXPECT_EQ(r.points, c.points);
    EXPECT_EQ(r.normals, c.normals);
    EXPECT_EQ(r.labels, c.labels);
  }
}

TEST(Ply, PointsOnlyAndScalarProperty) {
  const TempDir dir("ply");
  PointCloud c = labelled_cloud(10, 2);
  c.normals.clear();
  c.labels.clear();
  const std::vector<double> d(10, 0.5);
  write_ply(c, dir / "s.ply", PlyFormat::kAscii, d, "distance");
  const PointCloud r = read_ply(dir / "s.ply");
  EXPECT_EQ(r.points, c.points);
  EXPECT_FALSE(r.has_normals());
  EXPECT_FALSE(r.has_labels());
  EXPECT_EQ(code_of([&] { write_ply(c, dir / "t.ply", PlyFormat::kAscii, std::vector<double>(3, 0.0)); }),
            ErrorCode::kLengthMismatch);
}

TEST(Ply, RejectsNormalsLengthMismatch) {
  const TempDir dir("ply");
  PointCloud c = labelled_cloud(10, 3);
  c.normals.pop_back();
  EXPECT_EQ(code_of([&] { write_ply(c, dir / "bad.ply"); }), ErrorCode::kLengthMismatch);
}

TEST(Ply, ReadsMinimalThirdPartyFiles) {
  const TempDir dir("ply");
  write_raw(dir / "min.ply",
            "ply\nformat ascii 1.0\ncomment made elsewhere\nelement vertex 3\nproperty float x\nproperty float y\n"
            "property float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
            "0 0 0\n1 0 0\n0 1.5 0\n3 0 1 2\n");
  const PointCloud c = read_ply(dir / "min.ply");
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.points[2], Point3(0.0, 1.5, 0.0));
  EXPECT_FALSE(c.has_normals());
  const TriangleMesh m = read_ply_mesh(dir / "min.ply");
  ASSERT_EQ(m.triangles.size(), 1u);
  EXPECT_NEAR(m.surface_area(), 0.75, 1e-12);

  // Binary float32 with an extra uchar colour channel in between.
  std::string bin = "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty uchar red\n"
                    "property float y\nproperty float z\nend_header\n";
  auto put_float = [&bin](float f) { bin.append(reinterpret_cast<const char*>(&f), sizeof f); };
  put_float(0.25f);
  bin.push_back('\x7f');
  put_float(-2.0f);
  put_float(8.0f);
  put_float(1.0f);
  bin.push_back('\x00');
  put_float(0.5f);
  put_float(-0.125f);
  write_raw(dir / "bin.ply", bin);
  const PointCloud b = read_ply(dir / "bin.ply");
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b.points[0], Point3(0.25, -2.0, 8.0));
  EXPECT_EQ(b.points[1], Point3(1.0, 0.5, -0.125));
}

TEST(Ply, CorruptFilesNameThePath) {
  const TempDir dir("ply");
  write_raw(dir / "nomagic.ply", "plx\nformat ascii 1.0\nend_header\n");
  write_raw(dir / "short.ply", "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\n"
                               "property double z\nend_header\n0 0 0\n1 1 1\n");
  write_raw(dir / "noxyz.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nend_header\n0\n");
  write_raw(dir / "word.ply", "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\n"
                              "property double z\nend_header\n0 zero 0\n");
  write_ply(labelled_cloud(50, 4), dir / "trunc.ply");
  std::filesystem::resize_file(dir / "trunc.ply", std::filesystem::file_size(dir / "trunc.ply") - 9);
  for (const char* name : {"nomagic.ply", "short.ply", "noxyz.ply", "word.ply", "trunc.ply"}) {
    EXPECT_EQ(code_of([&] { read_ply(dir / name); }), ErrorCode::kParse) << name;
    EXPECT_NE(message_of([&] { read_ply(dir / name); }).find(name), std::string::npos) << name;
  }
  EXPECT_EQ(code_of([&] { read_ply(dir / "missing.ply"); }), ErrorCode::kIo);
}

TEST(Ply, MeshRoundTrip) {
  const TempDir dir("ply");
  const TriangleMesh m = generate_mesh(Shape::kDoublePyramid, 1.0);
  write_ply_mesh(m, dir / "m.ply");
  const TriangleMesh r = read_ply_mesh(dir / "m.ply");
  EXPECT_EQ(r.vertices, m.vertices);
  EXPECT_EQ(r.triangles, m.triangles);
  EXPECT_EQ(r.face_ids, m.face_ids);
}

TEST(Transforms, TextRoundTripIsExact) {
  const TempDir dir("tf");
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const RigidTransform t = testing::random_transform(rng, 180.0, 100.0);
    write_transform(dir / "t.txt", t);
    EXPECT_EQ(read_transform(dir / "t.txt").matrix(), t.matrix());
  }
  write_text(dir / "bad.txt", "1 0 0 0\n0 1 0 0\n0 0 1 0\n");
  EXPECT_EQ(code_of([&] { read_transform(dir / "bad.txt"); }), ErrorCode::kParse);
}

TEST(Json, RunConfigRoundTrip) {
  RunConfig c;
  c.scene = default_benchmark_scene(Shape::kPyramid);
  c.scene->noise_sigma = 0.002;
  c.scene->slide_per_view = Eigen::Vector3d(0.01, 0.0, 0.0);
  c.registration.window = 5;
  c.registration.translation_rule = TranslationRule::kProjectionMean;
  c.ransac.cluster_attempts = 2;
  c.backend = Backend::kIcp;
  c.seed = 42;
  const std::string text = to_json(c);
  EXPECT_EQ(to_json(run_config_from_json(text)), text);
  EXPECT_EQ(code_of([] { run_config_from_json("{\"backend\": \"magic\"}"); }), ErrorCode::kParse);
  EXPECT_EQ(code_of([] { run_config_from_json("[1, 2"); }), ErrorCode::kParse);
}

TEST(Json, ConstraintsRoundTrip) {
  MarkerConstraints m = MarkerConstraints::cube();
  m.pairwise_angles = {90.0, 54.7};
  const std::string text = to_json(m);
  EXPECT_EQ(to_json(constraints_from_json(text)), text);
}

TEST(RunConfig, Validation) {
  RunConfig c;
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
  c.scene = default_benchmark_scene();
  EXPECT_NO_THROW(c.validate());
  c.input_dir = "somewhere";
  EXPECT_EQ(code_of([&] { c.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(Manifest, ValidationAndMissingFiles) {
  ViewManifest m;
  EXPECT_EQ(code_of([&] { m.validate(); }), ErrorCode::kParse);
  m.views.push_back({{"a.ply"}, "o.ply", std::nullopt, Point3::Zero()});
  m.views.push_back({{"b.ply", "c.ply"}, "o.ply", std::nullopt, Point3::Zero()});
  EXPECT_EQ(code_of([&] { m.validate(); }), ErrorCode::kParse);
  m.views.pop_back();
  const TempDir dir("manifest");
  EXPECT_EQ(code_of([&] { check_manifest_files(m, dir.path()); }), ErrorCode::kIo);
  EXPECT_NE(message_of([&] { check_manifest_files(m, dir.path()); }).find("a.ply"), std::string::npos);
}

TEST(Dataset, RoundTripAndSingleView) {
  SceneSpec spec = default_benchmark_scene();
  spec.n_views = 1;
  spec.noise_sigma = 0.002;
  const auto views = synthesize(spec);
  const TempDir dir("dataset");
  write_dataset(dir.path(), views, object_mesh(spec));
  ViewManifest manifest;
  const auto loaded = load_dataset(dir.path(), &manifest);
  ASSERT_EQ(manifest.views.size(), 1u);
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].object_cloud.points, views[0].object_cloud.points);
  ASSERT_EQ(loaded[0].marker_clouds.size(), 4u);
  EXPECT_EQ(loaded[0].marker_clouds[2].labels, views[0].marker_clouds[2].labels);
  EXPECT_EQ(loaded[0].viewpoint, views[0].viewpoint);
  ASSERT_TRUE(loaded[0].ground_truth.has_value());
  EXPECT_EQ(loaded[0].ground_truth->matrix(), views[0].ground_truth->matrix());
}

TEST(Dataset, SameSeedGivesIdenticalBytes) {
  SceneSpec spec = default_benchmark_scene(Shape::kDoublePyramid);
  spec.n_views = 2;
  spec.noise_sigma = 0.002;
  const TempDir a("gen_a"), b("gen_b");
  write_dataset(a.path(), synthesize(spec), object_mesh(spec));
  write_dataset(b.path(), synthesize(spec), object_mesh(spec));
  std::size_t files = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a.path())) {
    if (!e.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(e.path(), a.path());
    EXPECT_EQ(read_text(e.path()), read_text(b.path() / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 2u * 5u + 2u + 1u + 1u);
}

}  // namespace
}  // namespace mumar
