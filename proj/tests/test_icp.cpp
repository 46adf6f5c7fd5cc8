#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mumar/error.hpp"
#include "mumar/icp.hpp"
#include "mumar/synth.hpp"
#include "test_util.hpp"

namespace mumar {
namespace {

using testing::code_of;

PointCloud with_plane_normals(PointCloud c, const Eigen::Vector3d& n) {
  c.normals.assign(c.size(), n);
  return c;
}

// Top and front (-y) faces of the unit cube, with normals.
PointCloud two_faces(double density, std::uint64_t seed) {
  const PointCloud all = sample_mesh(generate_mesh(Shape::kCube, 1.0), density, seed);
  PointCloud out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all.labels[i] != 2 && all.labels[i] != 5) continue;
    out.points.push_back(all.points[i]);
    out.normals.push_back(all.normals[i]);
  }
  return out;
}

TEST(IcpOptions, Validation) {
  IcpOptions o;
  EXPECT_NO_THROW(o.validate());
  o.rejection_fraction = 1.0;
  EXPECT_EQ(code_of([&] { o.validate(); }), ErrorCode::kInvalidArgument);
  o = IcpOptions{};
  o.max_iterations = 0;
  EXPECT_EQ(code_of([&] { o.validate(); }), ErrorCode::kInvalidArgument);
}

TEST(DetectBoundaries, SquareInteriorAndEdges) {
  const std::size_t per_side = 40;
  const PointCloud sq = testing::square_patch(1.0, per_side, 0.0, 5);
  const double pitch = 1.0 / static_cast<double>(per_side - 1);
  const auto mask = detect_boundaries(sq, 12);
  std::size_t rim = 0, rim_hits = 0;
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const Point3& p = sq.points[i];
    const double edge = std::min({p.x(), p.y(), 1.0 - p.x(), 1.0 - p.y()});
    EXPECT_TRUE(!mask[i] || edge <= 2.0 * pitch) << "interior point flagged at " << p.transpose();
    if (edge < 0.25 * pitch) {
      ++rim;
      rim_hits += mask[i];
    }
  }
  ASSERT_GT(rim, 0u);
  EXPECT_GE(static_cast<double>(rim_hits), 0.9 * static_cast<double>(rim));
}

TEST(DetectBoundaries, TooFewPoints) {
  PointCloud c;
  for (int i = 0; i < 5; ++i) c.points.emplace_back(i, 0.0, 0.0);
  EXPECT_EQ(code_of([&] { detect_boundaries(c, 5); }), ErrorCode::kTooFewPoints);
  EXPECT_EQ(code_of([&] { detect_boundaries(c, 2); }), ErrorCode::kInvalidArgument);
}

TEST(IcpPointToPlane, IdenticalCloudsGiveIdentityInOneIteration) {
  const PointCloud c = sample_mesh(generate_mesh(Shape::kDoublePyramid, 1.0), 1500.0, 3);
  const IcpResult r = icp_point_to_plane(c, c, IcpOptions{});
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_TRUE(r.converged);
  EXPECT_LT((r.transform.matrix() - Eigen::Matrix4d::Identity()).norm(), 1e-9);
}

TEST(IcpPointToPlane, RecoversKnownTransformOnDoublePyramid) {
  const TriangleMesh mesh = generate_mesh(Shape::kDoublePyramid, 1.0);
  const PointCloud scene = sample_mesh(mesh, 5000.0, 11);
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 3; ++trial) {
    const RigidTransform t = RigidTransform::from_axis_angle(testing::random_unit(rng), deg_to_rad(2.0),
                                                             testing::random_unit(rng) * 0.02);
    // data lives in a frame where t maps it back onto the scene.
    PointCloud data = apply_transform(t.inverse(), sample_mesh(mesh, 5000.0, 20 + trial));
    data.normals.clear();
    const IcpResult r = icp_point_to_plane(data, scene, IcpOptions{});
    EXPECT_TRUE(r.converged);
    const RigidTransform err = r.transform * t.inverse();
    EXPECT_LT(err.rotation_angle_deg(), 0.1);
    EXPECT_LT((r.transform.translation() - t.translation()).norm(), 1e-3);
    EXPECT_NEAR(r.transform.rotation().determinant(), 1.0, 1e-9);
  }
}

TEST(IcpPointToPlane, TwoPlanesSlideTangentially) {
  const PointCloud scene = two_faces(4000.0, 1);
  const Eigen::Vector3d shift(0.05, 0.01, -0.01);
  PointCloud data = apply_transform(RigidTransform::from_translation(-shift), two_faces(4000.0, 2));
  const IcpResult r = icp_point_to_plane(data, scene, IcpOptions{});
  const Eigen::Vector3d err = r.transform.translation() - shift;
  const double tangential = std::abs(err.x());
  const double normal = err.tail<2>().norm();
  EXPECT_GT(tangential, 5.0 * normal);
  EXPECT_LT(normal, 2e-3);
}

TEST(IcpPointToPlane, RmsTraceNonIncreasing) {
  const TriangleMesh mesh = generate_mesh(Shape::kPyramid, 1.0);
  const PointCloud scene = sample_mesh(mesh, 3000.0, 5);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 0.003);
  for (int trial = 0; trial < 4; ++trial) {
    PointCloud data = apply_transform(testing::random_transform(rng, 6.0, 0.05), sample_mesh(mesh, 3000.0, 40 + trial));
    for (auto& p : data.points) p += Eigen::Vector3d(noise(rng), noise(rng), noise(rng));
    const IcpResult r = icp_point_to_plane(data, scene, IcpOptions{});
    for (std::size_t i = 1; i < r.rms_trace.size(); ++i) EXPECT_LE(r.rms_trace[i], r.rms_trace[i - 1]);
    EXPECT_NEAR(r.transform.rotation().determinant(), 1.0, 1e-9);
    EXPECT_LT(orthonormality_error(r.transform.rotation()), 1e-9);
  }
}

TEST(IcpPointToPlane, VanillaStepMatchesLeastSquaresOracle) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    // Points on a wavy surface so all six directions are constrained.
    PointCloud scene;
    for (int i = 0; i < 150; ++i) {
      const double x = u(rng), y = u(rng);
      scene.points.emplace_back(x, y, 0.3 * std::sin(2.0 * x) * std::cos(1.5 * y));
      const Eigen::Vector3d n(-0.6 * std::cos(2.0 * x) * std::cos(1.5 * y), 0.45 * std::sin(2.0 * x) * std::sin(1.5 * y), 1.0);
      scene.normals.push_back(n.normalized());
    }
    PointCloud data = apply_transform(testing::random_transform(rng, 3.0, 0.03), scene);
    data.normals.clear();

    // One linearized step from brute-force nearest neighbours.
    Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> b = Eigen::Matrix<double, 6, 1>::Zero();
    double rms0 = 0.0;
    for (const auto& p : data.points) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < scene.size(); ++j) {
        const double d = (scene.points[j] - p).squaredNorm();
        if (d < best_d) best_d = d, best = j;
      }
      const Eigen::Vector3d& n = scene.normals[best];
      const double r = n.dot(p - scene.points[best]);
      rms0 += r * r;
      Eigen::Matrix<double, 6, 1> j;
      j << p.cross(n), n;
      a += j * j.transpose();
      b -= j * r;
    }
    const Eigen::Matrix<double, 6, 1> x = a.fullPivLu().solve(b);
    const Eigen::Vector3d w = x.head<3>();
    const RigidTransform expect =
        RigidTransform::orthonormalized(Eigen::AngleAxisd(w.norm(), w.normalized()).toRotationMatrix(), x.tail<3>());

    IcpOptions o;
    o.rejection_fraction = 0.0;
    o.use_boundaries = false;
    o.max_iterations = 2;
    o.convergence_delta = 0.0;
    const IcpResult r = icp_point_to_plane(data, scene, o);
    ASSERT_FALSE(r.rms_trace.empty());
    EXPECT_NEAR(r.rms_trace[0], std::sqrt(rms0 / static_cast<double>(data.size())), 1e-12);
    ASSERT_EQ(r.rms_trace.size(), 2u);
    EXPECT_LT((r.transform.matrix() - expect.matrix()).norm(), 1e-9);
  }
}

TEST(IcpPointToPlane, ErrorPaths) {
  const PointCloud c = with_plane_normals(testing::square_patch(1.0, 10, 0.0, 1), Eigen::Vector3d::UnitZ());
  PointCloud no_normals = c;
  no_normals.normals.clear();
  EXPECT_EQ(code_of([&] { icp_point_to_plane(c, no_normals, IcpOptions{}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { icp_point_to_plane(PointCloud{}, c, IcpOptions{}); }), ErrorCode::kEmptyInput);
  PointCloud tiny;
  for (int i = 0; i < 7; ++i) tiny.points.emplace_back(0.1 * i, 0.0, 0.0);
  IcpOptions o;
  o.use_boundaries = false;
  o.rejection_fraction = 0.5;
  EXPECT_EQ(code_of([&] { icp_point_to_plane(tiny, c, o); }), ErrorCode::kNoCorrespondences);
}

TEST(IcpRegisterSequence, IdenticalViewsGiveIdentities) {
  const PointCloud c = sample_mesh(generate_mesh(Shape::kCube, 1.0), 1000.0, 2);
  const std::vector<PointCloud> views{c, c, c};
  const auto r = icp_register_sequence(views, IcpOptions{});
  ASSERT_EQ(r.transforms.size(), 3u);
  for (const auto& t : r.transforms) EXPECT_LT((t.matrix() - Eigen::Matrix4d::Identity()).norm(), 1e-9);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(code_of([&] { icp_register_sequence(std::span(views).first(1), IcpOptions{}); }),
            ErrorCode::kInvalidArgument);
}

TEST(IcpRegisterSequence, ChainsPairwiseResults) {
  const TriangleMesh mesh = generate_mesh(Shape::kDoublePyramid, 1.0);
  const RigidTransform step = RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), deg_to_rad(1.5));
  std::vector<PointCloud> views;
  RigidTransform motion = RigidTransform::identity();
  for (int v = 0; v < 4; ++v) {
    PointCloud c = apply_transform(motion, sample_mesh(mesh, 4000.0, 70 + v));
    views.push_back(c);
    motion = step * motion;
  }
  const auto r = icp_register_sequence(views, IcpOptions{});
  for (std::size_t v = 0; v < views.size(); ++v) {
    const double expect = 1.5 * static_cast<double>(v);
    EXPECT_NEAR(r.transforms[v].rotation_angle_deg(), expect, 0.1);
  }
}

}  // namespace
}  // namespace mumar
