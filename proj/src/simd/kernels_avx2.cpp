// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include <immintrin.h>

#include <algorithm>

#include "bankaudit/simd/kernels.hpp"

namespace bankaudit::simd::avx2 {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot_f32(const float* a, const float* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 va = _mm256_loadu_ps(a + i);
    __m256 vb = _mm256_loadu_ps(b + i);
    __m256d a0 = _mm256_cvtps_pd(_mm256_castps256_ps128(va));
    __m256d a1 = _mm256_cvtps_pd(_mm256_extractf128_ps(va, 1));
    __m256d b0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vb));
    __m256d b1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1));
    acc0 = _mm256_fmadd_pd(a0, b0, acc0);
    acc1 = _mm256_fmadd_pd(a1, b1, acc1);
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return sum;
}

void dot_rows_f32(const float* rows, std::size_t row_count, std::size_t dim, const float* q,
                  double* out) {
  for (std::size_t r = 0; r < row_count; ++r) out[r] = dot_f32(rows + r * dim, q, dim);
}

void minmax_f64(const double* v, std::size_t n, double* lo, double* hi) {
  __m256d vlo = _mm256_set1_pd(*lo);
  __m256d vhi = _mm256_set1_pd(*hi);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d x = _mm256_loadu_pd(v + i);
    vlo = _mm256_min_pd(vlo, x);
    vhi = _mm256_max_pd(vhi, x);
  }
  alignas(32) double l[4];
  alignas(32) double h[4];
  _mm256_store_pd(l, vlo);
  _mm256_store_pd(h, vhi);
  double rl = std::min(std::min(l[0], l[1]), std::min(l[2], l[3]));
  double rh = std::max(std::max(h[0], h[1]), std::max(h[2], h[3]));
  for (; i < n; ++i) {
    rl = std::min(rl, v[i]);
    rh = std::max(rh, v[i]);
  }
  *lo = rl;
  *hi = rh;
}

// Same operation order as the scalar reference and no FMA contraction, so the
// distances are bit-identical.
void plane_max_f64(const double* xs, const double* ys, const double* zs, std::size_t n, double nx,
                   double ny, double nz, double offset, double* running_max) {
  const __m256d vnx = _mm256_set1_pd(nx);
  const __m256d vny = _mm256_set1_pd(ny);
  const __m256d vnz = _mm256_set1_pd(nz);
  const __m256d voff = _mm256_set1_pd(offset);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_mul_pd(vnx, _mm256_loadu_pd(xs + i));
    d = _mm256_add_pd(d, _mm256_mul_pd(vny, _mm256_loadu_pd(ys + i)));
    d = _mm256_add_pd(d, _mm256_mul_pd(vnz, _mm256_loadu_pd(zs + i)));
    d = _mm256_sub_pd(d, voff);
    __m256d cur = _mm256_loadu_pd(running_max + i);
    // max(cur, d) with the scalar std::max tie/NaN semantics: picks d only when cur < d
    __m256d take = _mm256_cmp_pd(cur, d, _CMP_LT_OQ);
    _mm256_storeu_pd(running_max + i, _mm256_blendv_pd(cur, d, take));
  }
  for (; i < n; ++i) {
    double d = nx * xs[i];
    d = d + ny * ys[i];
    d = d + nz * zs[i];
    d = d - offset;
    running_max[i] = std::max(running_max[i], d);
  }
}

}  // namespace

const KernelTable table{&dot_f32, &dot_rows_f32, &minmax_f64, &plane_max_f64};

}  // namespace bankaudit::simd::avx2
