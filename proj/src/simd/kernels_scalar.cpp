#include <algorithm>

#include "bankaudit/simd/kernels.hpp"

namespace bankaudit::simd::scalar {
namespace {

double dot_f32(const float* a, const float* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return sum;
}

void dot_rows_f32(const float* rows, std::size_t row_count, std::size_t dim, const float* q,
                  double* out) {
  for (std::size_t r = 0; r < row_count; ++r) out[r] = dot_f32(rows + r * dim, q, dim);
}

void minmax_f64(const double* v, std::size_t n, double* lo, double* hi) {
  double l = *lo;
  double h = *hi;
  for (std::size_t i = 0; i < n; ++i) {
    l = std::min(l, v[i]);
    h = std::max(h, v[i]);
  }
  *lo = l;
  *hi = h;
}

void plane_max_f64(const double* xs, const double* ys, const double* zs, std::size_t n, double nx,
                   double ny, double nz, double offset, double* running_max) {
  for (std::size_t i = 0; i < n; ++i) {
    double d = nx * xs[i];
    d = d + ny * ys[i];
    d = d + nz * zs[i];
    d = d - offset;
    running_max[i] = std::max(running_max[i], d);
  }
}

}  // namespace

const KernelTable table{&dot_f32, &dot_rows_f32, &minmax_f64, &plane_max_f64};

}  // namespace bankaudit::simd::scalar
