#include "kernels_internal.hpp"

namespace mumar::simd::detail {
namespace {

void squared_distances_scalar(const double* xs, const double* ys, const double* zs, std::size_t n,
                              const double* q, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - q[0];
    const double dy = ys[i] - q[1];
    const double dz = zs[i] - q[2];
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

void plane_distances_scalar(const double* xyz, std::size_t n, const double* nrm, double offset,
                            double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = xyz + 3 * i;
    out[i] = ((p[0] * nrm[0] + p[1] * nrm[1]) + p[2] * nrm[2]) - offset;
  }
}

void transform_points_scalar(const double* xyz, std::size_t n, const double* r, const double* t,
                             double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double x = xyz[3 * i];
    const double y = xyz[3 * i + 1];
    const double z = xyz[3 * i + 2];
    out[3 * i] = ((r[0] * x + r[1] * y) + r[2] * z) + t[0];
    out[3 * i + 1] = ((r[3] * x + r[4] * y) + r[5] * z) + t[1];
    out[3 * i + 2] = ((r[6] * x + r[7] * y) + r[8] * z) + t[2];
  }
}

void accumulate_moments_scalar(const double* xyz, std::size_t n, const double* shift, double* m) {
  double acc[9] = {};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = xyz[3 * i] - shift[0];
    const double y = xyz[3 * i + 1] - shift[1];
    const double z = xyz[3 * i + 2] - shift[2];
    acc[0] += x;
    acc[1] += y;
    acc[2] += z;
    acc[3] += x * x;
    acc[4] += x * y;
    acc[5] += x * z;
    acc[6] += y * y;
    acc[7] += y * z;
    acc[8] += z * z;
  }
  for (int k = 0; k < 9; ++k) m[k] = acc[k];
}

constexpr KernelTable kScalar{
    squared_distances_scalar,
    plane_distances_scalar,
    transform_points_scalar,
    accumulate_moments_scalar,
};

}  // namespace

const KernelTable* scalar_table() { return &kScalar; }

}  // namespace mumar::simd::detail
