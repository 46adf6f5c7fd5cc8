#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "mumar/error.hpp"

namespace mumar::simd {

namespace detail {
#ifndef MUMAR_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif
#ifndef MUMAR_HAVE_NEON
const KernelTable* neon_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(MUMAR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(MUMAR_HAVE_NEON)
      return true;  // baseline on AArch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return detail::scalar_table();
    case Isa::kAvx2:
      return detail::avx2_table();
    case Isa::kNeon:
      return detail::neon_table();
  }
  return nullptr;
}

Isa pick_isa() {
  if (const char* env = std::getenv("MUMAR_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && isa_available(Isa::kAvx2)) return Isa::kAvx2;
    if (want == "neon" && isa_available(Isa::kNeon)) return Isa::kNeon;
    if (want != "auto") return Isa::kScalar;
  }
  if (isa_available(Isa::kAvx2)) return Isa::kAvx2;
  if (isa_available(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

struct Active {
  Isa isa;
  const KernelTable* table;
};

const Active& active() {
  static const Active a = [] {
    const Isa isa = pick_isa();
    return Active{isa, table_for(isa)};
  }();
  return a;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) { return table_for(isa) != nullptr && cpu_supports(isa); }

const KernelTable& kernels() { return *active().table; }

Isa active_isa() { return active().isa; }

const KernelTable& kernels_for(Isa isa) {
  if (!isa_available(isa)) {
    throw Error(ErrorCode::kInvalidArgument, "SIMD variant not available: " + std::string(to_string(isa)));
  }
  return *table_for(isa);
}

const KernelTable& scalar_kernels() { return *detail::scalar_table(); }

static_assert(sizeof(Eigen::Vector3d) == 3 * sizeof(double), "Vector3d must be tightly packed");

void squared_distances(std::span<const double> xs, std::span<const double> ys,
                       std::span<const double> zs, const Eigen::Vector3d& query,
                       std::span<double> out) {
  kernels().squared_distances(xs.data(), ys.data(), zs.data(), xs.size(), query.data(), out.data());
}

void plane_distances(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& normal,
                     double offset, std::span<double> out) {
  if (points.empty()) return;
  kernels().plane_distances(points.data()->data(), points.size(), normal.data(), offset, out.data());
}

void transform_points(std::span<const Eigen::Vector3d> points, const Eigen::Matrix3d& rotation,
                      const Eigen::Vector3d& translation, std::span<Eigen::Vector3d> out) {
  if (points.empty()) return;
  const Eigen::Matrix<double, 3, 3, Eigen::RowMajor> r = rotation;
  kernels().transform_points(points.data()->data(), points.size(), r.data(), translation.data(),
                             out.data()->data());
}

Moments accumulate_moments(std::span<const Eigen::Vector3d> points, const Eigen::Vector3d& shift) {
  Moments m{};
  if (points.empty()) return m;
  kernels().accumulate_moments(points.data()->data(), points.size(), shift.data(), m.data());
  return m;
}

}  // namespace mumar::simd
