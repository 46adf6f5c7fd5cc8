#include <arm_neon.h>

#include "kernels_internal.hpp"

namespace mumar::simd::detail {
namespace {

void squared_distances_neon(const double* xs, const double* ys, const double* zs, std::size_t n,
                            const double* q, double* out) {
  const float64x2_t qx = vdupq_n_f64(q[0]);
  const float64x2_t qy = vdupq_n_f64(q[1]);
  const float64x2_t qz = vdupq_n_f64(q[2]);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t dx = vsubq_f64(vld1q_f64(xs + i), qx);
    const float64x2_t dy = vsubq_f64(vld1q_f64(ys + i), qy);
    const float64x2_t dz = vsubq_f64(vld1q_f64(zs + i), qz);
    vst1q_f64(out + i,
              vaddq_f64(vaddq_f64(vmulq_f64(dx, dx), vmulq_f64(dy, dy)), vmulq_f64(dz, dz)));
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - q[0];
    const double dy = ys[i] - q[1];
    const double dz = zs[i] - q[2];
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

void plane_distances_neon(const double* xyz, std::size_t n, const double* nrm, double offset,
                          double* out) {
  const float64x2_t n0 = vdupq_n_f64(nrm[0]);
  const float64x2_t n1 = vdupq_n_f64(nrm[1]);
  const float64x2_t n2 = vdupq_n_f64(nrm[2]);
  const float64x2_t off = vdupq_n_f64(offset);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2x3_t p = vld3q_f64(xyz + 3 * i);
    const float64x2_t d =
        vaddq_f64(vaddq_f64(vmulq_f64(p.val[0], n0), vmulq_f64(p.val[1], n1)), vmulq_f64(p.val[2], n2));
    vst1q_f64(out + i, vsubq_f64(d, off));
  }
  for (; i < n; ++i) {
    const double* p = xyz + 3 * i;
    out[i] = ((p[0] * nrm[0] + p[1] * nrm[1]) + p[2] * nrm[2]) - offset;
  }
}

inline float64x2_t row(const float64x2_t* r, const float64x2x3_t& p, float64x2_t t) {
  return vaddq_f64(
      vaddq_f64(vaddq_f64(vmulq_f64(r[0], p.val[0]), vmulq_f64(r[1], p.val[1])), vmulq_f64(r[2], p.val[2])),
      t);
}

void transform_points_neon(const double* xyz, std::size_t n, const double* r, const double* t,
                           double* out) {
  float64x2_t rm[9];
  for (int k = 0; k < 9; ++k) rm[k] = vdupq_n_f64(r[k]);
  const float64x2_t t0 = vdupq_n_f64(t[0]);
  const float64x2_t t1 = vdupq_n_f64(t[1]);
  const float64x2_t t2 = vdupq_n_f64(t[2]);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2x3_t p = vld3q_f64(xyz + 3 * i);
    float64x2x3_t o;
    o.val[0] = row(rm, p, t0);
    o.val[1] = row(rm + 3, p, t1);
    o.val[2] = row(rm + 6, p, t2);
    vst3q_f64(out + 3 * i, o);
  }
  for (; i < n; ++i) {
    const double x = xyz[3 * i];
    const double y = xyz[3 * i + 1];
    const double z = xyz[3 * i + 2];
    out[3 * i] = ((r[0] * x + r[1] * y) + r[2] * z) + t[0];
    out[3 * i + 1] = ((r[3] * x + r[4] * y) + r[5] * z) + t[1];
    out[3 * i + 2] = ((r[6] * x + r[7] * y) + r[8] * z) + t[2];
  }
}

void accumulate_moments_neon(const double* xyz, std::size_t n, const double* shift, double* m) {
  const float64x2_t sx = vdupq_n_f64(shift[0]);
  const float64x2_t sy = vdupq_n_f64(shift[1]);
  const float64x2_t sz = vdupq_n_f64(shift[2]);
  float64x2_t acc[9];
  for (auto& a : acc) a = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2x3_t p = vld3q_f64(xyz + 3 * i);
    const float64x2_t x = vsubq_f64(p.val[0], sx);
    const float64x2_t y = vsubq_f64(p.val[1], sy);
    const float64x2_t z = vsubq_f64(p.val[2], sz);
    acc[0] = vaddq_f64(acc[0], x);
    acc[1] = vaddq_f64(acc[1], y);
    acc[2] = vaddq_f64(acc[2], z);
    acc[3] = vaddq_f64(acc[3], vmulq_f64(x, x));
    acc[4] = vaddq_f64(acc[4], vmulq_f64(x, y));
    acc[5] = vaddq_f64(acc[5], vmulq_f64(x, z));
    acc[6] = vaddq_f64(acc[6], vmulq_f64(y, y));
    acc[7] = vaddq_f64(acc[7], vmulq_f64(y, z));
    acc[8] = vaddq_f64(acc[8], vmulq_f64(z, z));
  }
  double out[9];
  for (int k = 0; k < 9; ++k) out[k] = vgetq_lane_f64(acc[k], 0) + vgetq_lane_f64(acc[k], 1);
  for (; i < n; ++i) {
    const double x = xyz[3 * i] - shift[0];
    const double y = xyz[3 * i + 1] - shift[1];
    const double z = xyz[3 * i + 2] - shift[2];
    out[0] += x;
    out[1] += y;
    out[2] += z;
    out[3] += x * x;
    out[4] += x * y;
    out[5] += x * z;
    out[6] += y * y;
    out[7] += y * z;
    out[8] += z * z;
  }
  for (int k = 0; k < 9; ++k) m[k] = out[k];
}

constexpr KernelTable kNeon{
    squared_distances_neon,
    plane_distances_neon,
    transform_points_neon,
    accumulate_moments_neon,
};

}  // namespace

const KernelTable* neon_table() { return &kNeon; }

}  // namespace mumar::simd::detail
