#pragma once

// Data-parallel inner loops used by geometry and crossmodal code.
//
// Each kernel has a portable scalar reference and an AVX2 variant; the
// variant is picked once at startup from CPUID (override with the
// BANKAUDIT_ISA=scalar|avx2 environment variable). The plane and min/max
// kernels are bit-identical across variants. The dot products accumulate in
// double and differ across variants only by summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace bankaudit::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;
bool isa_available(Isa isa) noexcept;
Isa active_isa() noexcept;
// Test hook; throws Error(InvalidArgument) when the ISA is unavailable.
void set_active_isa(Isa isa);

struct KernelTable {
  double (*dot_f32)(const float* a, const float* b, std::size_t n);
  // out[r] = dot(rows[r*dim .. r*dim+dim), q)
  void (*dot_rows_f32)(const float* rows, std::size_t row_count, std::size_t dim, const float* q,
                       double* out);
  void (*minmax_f64)(const double* v, std::size_t n, double* lo, double* hi);
  // running_max[i] = max(running_max[i], nx*xs[i] + ny*ys[i] + nz*zs[i] - offset)
  void (*plane_max_f64)(const double* xs, const double* ys, const double* zs, std::size_t n,
                        double nx, double ny, double nz, double offset, double* running_max);
};

const KernelTable& kernels_for(Isa isa);
const KernelTable& kernels() noexcept;

// Span front-ends over the active table.
double dot(std::span<const float> a, std::span<const float> b);
void dot_rows(std::span<const float> rows, std::size_t dim, std::span<const float> q,
              std::span<double> out);
void minmax(std::span<const double> v, double& lo, double& hi);

struct Plane {
  double nx = 0.0;
  double ny = 0.0;
  double nz = 1.0;
  double offset = 0.0;
};

// Structure-of-arrays point set, the layout the plane kernel wants.
struct PointsSoA {
  std::span<const double> xs;
  std::span<const double> ys;
  std::span<const double> zs;
  std::size_t size() const noexcept { return xs.size(); }
};

void plane_max(const PointsSoA& pts, const Plane& plane, std::span<double> running_max);

namespace scalar {
extern const KernelTable table;
}
namespace avx2 {
extern const KernelTable table;
}

}  // namespace bankaudit::simd
