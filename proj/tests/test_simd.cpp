#include <cstring>
#include <random>
#include <vector>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "mumar/simd.hpp"

namespace mumar::simd {
namespace {

std::vector<Isa> vector_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kAvx2, Isa::kNeon}) {
    if (isa_available(isa)) out.push_back(isa);
  }
  return out;
}

std::vector<double> random_doubles(std::size_t n, std::uint64_t seed, double scale = 10.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

// Lengths straddle every vector width and remainder.
const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 33, 100, 1023};

TEST(Simd, ScalarAlwaysAvailable) {
  EXPECT_TRUE(isa_available(Isa::kScalar));
  EXPECT_NO_THROW(kernels_for(Isa::kScalar));
  EXPECT_FALSE(to_string(active_isa()).empty());
}

TEST(Simd, SquaredDistancesBitIdentical) {
  const KernelTable& ref = scalar_kernels();
  for (Isa isa : vector_isas()) {
    const KernelTable& k = kernels_for(isa);
    for (std::size_t n : kLengths) {
      const auto xs = random_doubles(n, 1 + n), ys = random_doubles(n, 2 + n), zs = random_doubles(n, 3 + n);
      const double q[3] = {0.25, -1.5, 3.0};
      std::vector<double> a(n), b(n);
      ref.squared_distances(xs.data(), ys.data(), zs.data(), n, q, a.data());
      k.squared_distances(xs.data(), ys.data(), zs.data(), n, q, b.data());
      EXPECT_TRUE(bit_equal(a, b)) << to_string(isa) << " n=" << n;
    }
  }
}

TEST(Simd, PlaneDistancesBitIdentical) {
  const KernelTable& ref = scalar_kernels();
  for (Isa isa : vector_isas()) {
    const KernelTable& k = kernels_for(isa);
    for (std::size_t n : kLengths) {
      const auto xyz = random_doubles(3 * n, 10 + n);
      const double normal[3] = {0.48, -0.6, 0.64};
      std::vector<double> a(n), b(n);
      ref.plane_distances(xyz.data(), n, normal, 0.7, a.data());
      k.plane_distances(xyz.data(), n, normal, 0.7, b.data());
      EXPECT_TRUE(bit_equal(a, b)) << to_string(isa) << " n=" << n;
    }
  }
}

TEST(Simd, TransformPointsBitIdenticalAndInPlace) {
  const KernelTable& ref = scalar_kernels();
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  double rot[9];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot[3 * i + j] = r(i, j);
  const double t[3] = {1.0, -2.0, 0.5};
  for (Isa isa : vector_isas()) {
    const KernelTable& k = kernels_for(isa);
    for (std::size_t n : kLengths) {
      const auto xyz = random_doubles(3 * n, 20 + n);
      std::vector<double> a(3 * n), b(3 * n), inplace = xyz;
      ref.transform_points(xyz.data(), n, rot, t, a.data());
      k.transform_points(xyz.data(), n, rot, t, b.data());
      k.transform_points(inplace.data(), n, rot, t, inplace.data());
      EXPECT_TRUE(bit_equal(a, b)) << to_string(isa) << " n=" << n;
      EXPECT_TRUE(bit_equal(a, inplace)) << to_string(isa) << " n=" << n;
    }
  }
}

TEST(Simd, MomentsAgreeToRounding) {
  const KernelTable& ref = scalar_kernels();
  for (Isa isa : vector_isas()) {
    const KernelTable& k = kernels_for(isa);
    for (std::size_t n : kLengths) {
      const auto xyz = random_doubles(3 * n, 30 + n);
      const double shift[3] = {0.1, 0.2, -0.3};
      double a[9], b[9];
      ref.accumulate_moments(xyz.data(), n, shift, a);
      k.accumulate_moments(xyz.data(), n, shift, b);
      for (int i = 0; i < 9; ++i) {
        EXPECT_NEAR(a[i], b[i], 1e-12 * (1.0 + std::abs(a[i]))) << to_string(isa) << " n=" << n << " i=" << i;
      }
    }
  }
}

TEST(Simd, WrappersMatchScalarTable) {
  std::vector<Eigen::Vector3d> pts;
  const auto raw = random_doubles(3 * 37, 99);
  for (std::size_t i = 0; i < 37; ++i) pts.emplace_back(raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]);
  const Moments m = accumulate_moments(pts, Eigen::Vector3d::Zero());
  double sx = 0.0, szz = 0.0;
  for (const auto& p : pts) {
    sx += p.x();
    szz += p.z() * p.z();
  }
  EXPECT_NEAR(m[0], sx, 1e-12 * (1.0 + std::abs(sx)));
  EXPECT_NEAR(m[8], szz, 1e-12 * szz);

  std::vector<double> d(pts.size());
  plane_distances(pts, Eigen::Vector3d::UnitZ(), 1.0, d);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(d[i], pts[i].z() - 1.0);
}

}  // namespace
}  // namespace mumar::simd
