#pragma once

// Data-parallel kernels used by the hot loops (k-d tree leaf scans, cloud
// transforms, plane residuals, covariance moments). Every kernel has a scalar
// reference implementation; vectorized variants are selected once at runtime.
//
// Element-wise kernels (squared_distances, plane_distances, transform_points)
// are bit-identical across ISAs: same operation order, no FMA contraction.
// accumulate_moments is a reduction and only agrees to rounding.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include <Eigen/Core>

namespace mumar::simd {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view to_string(Isa isa);

/// Raw kernel entry points. Point arrays are interleaved xyz (AoS) unless the
/// parameter names say otherwise.
struct KernelTable {
  // out[i] = (x[i]-q0)^2 + (y[i]-q1)^2 + (z[i]-q2)^2, summed left to right.
  void (*squared_distances)(const double* xs, const double* ys, const double* zs, std::size_t n,
                            const double* query, double* out);
  // out[i] = ((p.x*n0 + p.y*n1) + p.z*n2) - offset
  void (*plane_distances)(const double* xyz, std::size_t n, const double* normal, double offset,
                          double* out);
  // out = R * p + t, R row-major. in and out may alias.
  void (*transform_points)(const double* xyz, std::size_t n, const double* rotation,
                           const double* translation, double* out);
  // Shifted raw moments: [sx, sy, sz, sxx, sxy, sxz, syy, syz, szz] of (p - shift).
  void (*accumulate_moments)(const double* xyz, std::size_t n, const double* shift,
                             double* moments);
};

/// Kernels for the ISA picked at startup. MUMAR_SIMD=scalar|avx2|neon forces
/// a choice (falls back to scalar when the request is unavailable).
const KernelTable& kernels();
Isa active_isa();

bool isa_available(Isa isa);
/// Throws Error(kInvalidArgument) when the ISA is not compiled in or not supported by the CPU.
const KernelTable& kernels_for(Isa isa);

const KernelTable& scalar_kernels();

// Typed wrappers over the active table.

using Moments = std::array<double, 9>;

void squared_distances(std::span<const double> xs, std::span<const double> ys,
                       std::span<const double> zs, const Eigen::Vector3d& query,
                       std::span<double> out);
void plane_distances(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& normal,
                     double offset, std::span<double> out);
void transform_points(std::span<const Eigen::Vector3d> points, const Eigen::Matrix3d& rotation,
                      const Eigen::Vector3d& translation, std::span<Eigen::Vector3d> out);
Moments accumulate_moments(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& shift);

}  // namespace mumar::simd
