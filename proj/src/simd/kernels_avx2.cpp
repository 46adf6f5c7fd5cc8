#include <immintrin.h>

#include "kernels_internal.hpp"

#ifndef __AVX2__
#error "kernels_avx2.cpp must be compiled with -mavx2"
#endif

namespace mumar::simd::detail {
namespace {

// Offsets of x for four consecutive interleaved points.
inline __m256i aos_index() { return _mm256_setr_epi64x(0, 3, 6, 9); }

void squared_distances_avx2(const double* xs, const double* ys, const double* zs, std::size_t n,
                            const double* q, double* out) {
  const __m256d qx = _mm256_set1_pd(q[0]);
  const __m256d qy = _mm256_set1_pd(q[1]);
  const __m256d qz = _mm256_set1_pd(q[2]);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), qx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), qy);
    const __m256d dz = _mm256_sub_pd(_mm256_loadu_pd(zs + i), qz);
    const __m256d s = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)),
                                    _mm256_mul_pd(dz, dz));
    _mm256_storeu_pd(out + i, s);
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - q[0];
    const double dy = ys[i] - q[1];
    const double dz = zs[i] - q[2];
    out[i] = (dx * dx + dy * dy) + dz * dz;
  }
}

void plane_distances_avx2(const double* xyz, std::size_t n, const double* nrm, double offset,
                          double* out) {
  const __m256i idx = aos_index();
  const __m256d n0 = _mm256_set1_pd(nrm[0]);
  const __m256d n1 = _mm256_set1_pd(nrm[1]);
  const __m256d n2 = _mm256_set1_pd(nrm[2]);
  const __m256d off = _mm256_set1_pd(offset);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* base = xyz + 3 * i;
    const __m256d x = _mm256_i64gather_pd(base, idx, 8);
    const __m256d y = _mm256_i64gather_pd(base + 1, idx, 8);
    const __m256d z = _mm256_i64gather_pd(base + 2, idx, 8);
    const __m256d d =
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(x, n0), _mm256_mul_pd(y, n1)), _mm256_mul_pd(z, n2));
    _mm256_storeu_pd(out + i, _mm256_sub_pd(d, off));
  }
  for (; i < n; ++i) {
    const double* p = xyz + 3 * i;
    out[i] = ((p[0] * nrm[0] + p[1] * nrm[1]) + p[2] * nrm[2]) - offset;
  }
}

void transform_points_avx2(const double* xyz, std::size_t n, const double* r, const double* t,
                           double* out) {
  const __m256i idx = aos_index();
  __m256d rm[9];
  for (int k = 0; k < 9; ++k) rm[k] = _mm256_set1_pd(r[k]);
  const __m256d t0 = _mm256_set1_pd(t[0]);
  const __m256d t1 = _mm256_set1_pd(t[1]);
  const __m256d t2 = _mm256_set1_pd(t[2]);
  alignas(32) double ox[4], oy[4], oz[4];
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* base = xyz + 3 * i;
    const __m256d x = _mm256_i64gather_pd(base, idx, 8);
    const __m256d y = _mm256_i64gather_pd(base + 1, idx, 8);
    const __m256d z = _mm256_i64gather_pd(base + 2, idx, 8);
    const __m256d a = _mm256_add_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(rm[0], x), _mm256_mul_pd(rm[1], y)),
                      _mm256_mul_pd(rm[2], z)),
        t0);
    const __m256d b = _mm256_add_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(rm[3], x), _mm256_mul_pd(rm[4], y)),
                      _mm256_mul_pd(rm[5], z)),
        t1);
    const __m256d c = _mm256_add_pd(
        _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(rm[6], x), _mm256_mul_pd(rm[7], y)),
                      _mm256_mul_pd(rm[8], z)),
        t2);
    _mm256_store_pd(ox, a);
    _mm256_store_pd(oy, b);
    _mm256_store_pd(oz, c);
    double* dst = out + 3 * i;
    for (int k = 0; k < 4; ++k) {
      dst[3 * k] = ox[k];
      dst[3 * k + 1] = oy[k];
      dst[3 * k + 2] = oz[k];
    }
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

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

void accumulate_moments_avx2(const double* xyz, std::size_t n, const double* shift, double* m) {
  const __m256i idx = aos_index();
  const __m256d sx = _mm256_set1_pd(shift[0]);
  const __m256d sy = _mm256_set1_pd(shift[1]);
  const __m256d sz = _mm256_set1_pd(shift[2]);
  __m256d acc[9];
  for (auto& a : acc) a = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* base = xyz + 3 * i;
    const __m256d x = _mm256_sub_pd(_mm256_i64gather_pd(base, idx, 8), sx);
    const __m256d y = _mm256_sub_pd(_mm256_i64gather_pd(base + 1, idx, 8), sy);
    const __m256d z = _mm256_sub_pd(_mm256_i64gather_pd(base + 2, idx, 8), sz);
    acc[0] = _mm256_add_pd(acc[0], x);
    acc[1] = _mm256_add_pd(acc[1], y);
    acc[2] = _mm256_add_pd(acc[2], z);
    acc[3] = _mm256_add_pd(acc[3], _mm256_mul_pd(x, x));
    acc[4] = _mm256_add_pd(acc[4], _mm256_mul_pd(x, y));
    acc[5] = _mm256_add_pd(acc[5], _mm256_mul_pd(x, z));
    acc[6] = _mm256_add_pd(acc[6], _mm256_mul_pd(y, y));
    acc[7] = _mm256_add_pd(acc[7], _mm256_mul_pd(y, z));
    acc[8] = _mm256_add_pd(acc[8], _mm256_mul_pd(z, z));
  }
  double out[9];
  for (int k = 0; k < 9; ++k) out[k] = hsum(acc[k]);
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

constexpr KernelTable kAvx2{
    squared_distances_avx2,
    plane_distances_avx2,
    transform_points_avx2,
    accumulate_moments_avx2,
};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace mumar::simd::detail
