#include <atomic>
#include <cstdlib>
#include <string>

#include "bankaudit/core/error.hpp"
#include "bankaudit/simd/kernels.hpp"

namespace bankaudit::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(BANKAUDIT_HAVE_AVX2)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("BANKAUDIT_ISA")) {
    std::string want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && cpu_has_avx2()) return Isa::avx2;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) noexcept { return isa == Isa::scalar || cpu_has_avx2(); }

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) fail(ErrorKind::InvalidArgument, "ISA not available: " + std::string(isa_name(isa)));
  current().store(isa, std::memory_order_relaxed);
}

const KernelTable& kernels_for(Isa isa) {
  if (isa == Isa::avx2) {
#if defined(BANKAUDIT_HAVE_AVX2)
    if (cpu_has_avx2()) return avx2::table;
#endif
    fail(ErrorKind::InvalidArgument, "avx2 not supported on this CPU");
  }
  return scalar::table;
}

const KernelTable& kernels() noexcept {
#if defined(BANKAUDIT_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return avx2::table;
#endif
  return scalar::table;
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) fail(ErrorKind::DimMismatch, "dot of vectors with different lengths");
  return kernels().dot_f32(a.data(), b.data(), a.size());
}

void dot_rows(std::span<const float> rows, std::size_t dim, std::span<const float> q, std::span<double> out) {
  if (dim == 0 || q.size() != dim || rows.size() != out.size() * dim) {
    fail(ErrorKind::DimMismatch, "dot_rows shape mismatch");
  }
  kernels().dot_rows_f32(rows.data(), out.size(), dim, q.data(), out.data());
}

void minmax(std::span<const double> v, double& lo, double& hi) {
  kernels().minmax_f64(v.data(), v.size(), &lo, &hi);
}

void plane_max(const PointsSoA& pts, const Plane& plane, std::span<double> running_max) {
  if (pts.ys.size() != pts.size() || pts.zs.size() != pts.size() || running_max.size() != pts.size()) {
    fail(ErrorKind::DimMismatch, "plane_max shape mismatch");
  }
  kernels().plane_max_f64(pts.xs.data(), pts.ys.data(), pts.zs.data(), pts.size(), plane.nx, plane.ny,
                          plane.nz, plane.offset, running_max.data());
}

}  // namespace bankaudit::simd
