#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "bankaudit/core/error.hpp"
#include "bankaudit/simd/kernels.hpp"

using namespace bankaudit;
using namespace bankaudit::simd;

namespace {

std::vector<float> random_floats(std::mt19937& rng, std::size_t n) {
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

std::vector<double> random_doubles(std::mt19937& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar table is always available") {
  CHECK(isa_available(Isa::scalar));
  CHECK(&kernels_for(Isa::scalar) == &scalar::table);
}

TEST_CASE("dot product variants agree on every tail length") {
  if (!isa_available(Isa::avx2)) return;
  const auto& s = kernels_for(Isa::scalar);
  const auto& v = kernels_for(Isa::avx2);
  std::mt19937 rng(7);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto a = random_floats(rng, n);
    const auto b = random_floats(rng, n);
    const double ref = s.dot_f32(a.data(), b.data(), n);
    const double got = v.dot_f32(a.data(), b.data(), n);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(double(a[i]) * double(b[i]));
    CHECK(std::abs(ref - got) <= 1e-12 * std::max(1.0, mag));
  }
}

TEST_CASE("dot_rows matches per-row dot") {
  std::mt19937 rng(11);
  const std::size_t dim = 37, rows = 19;
  const auto m = random_floats(rng, dim * rows);
  const auto q = random_floats(rng, dim);
  for (auto isa : {Isa::scalar, Isa::avx2}) {
    if (!isa_available(isa)) continue;
    const auto& t = kernels_for(isa);
    std::vector<double> out(rows);
    t.dot_rows_f32(m.data(), rows, dim, q.data(), out.data());
    for (std::size_t r = 0; r < rows; ++r) CHECK(out[r] == t.dot_f32(m.data() + r * dim, q.data(), dim));
  }
}

TEST_CASE("minmax and plane_max are bit-identical across variants") {
  if (!isa_available(Isa::avx2)) return;
  const auto& s = kernels_for(Isa::scalar);
  const auto& v = kernels_for(Isa::avx2);
  std::mt19937 rng(3);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 13u, 64u, 1001u}) {
    const auto xs = random_doubles(rng, n, 1e3);
    const auto ys = random_doubles(rng, n, 1e-2);
    const auto zs = random_doubles(rng, n, 50.0);

    double lo_s = std::numeric_limits<double>::infinity(), hi_s = -lo_s;
    double lo_v = lo_s, hi_v = hi_s;
    s.minmax_f64(xs.data(), n, &lo_s, &hi_s);
    v.minmax_f64(xs.data(), n, &lo_v, &hi_v);
    CHECK(lo_s == lo_v);
    CHECK(hi_s == hi_v);

    std::vector<double> run_s(n, -1.0), run_v(n, -1.0);
    for (int plane = 0; plane < 5; ++plane) {
      const double nx = 0.3 * plane - 0.5, ny = 0.7, nz = -0.2 * plane, off = 0.1 * plane;
      s.plane_max_f64(xs.data(), ys.data(), zs.data(), n, nx, ny, nz, off, run_s.data());
      v.plane_max_f64(xs.data(), ys.data(), zs.data(), n, nx, ny, nz, off, run_v.data());
    }
    CHECK(run_s == run_v);
  }
}

TEST_CASE("front-ends follow the active ISA and validate shapes") {
  const Isa before = active_isa();
  std::vector<float> a{1, 2, 3}, b{4, 5, 6};
  for (auto isa : {Isa::scalar, Isa::avx2}) {
    if (!isa_available(isa)) continue;
    set_active_isa(isa);
    CHECK(active_isa() == isa);
    CHECK(dot(a, b) == doctest::Approx(32.0));
  }
  set_active_isa(before);
  std::vector<float> short_b{1, 2};
  CHECK_THROWS_AS(dot(a, short_b), Error);
  std::vector<double> out(2);
  CHECK_THROWS_AS(dot_rows(a, 3, b, out), Error);
}

TEST_CASE("plane_max keeps the larger of running and new distance") {
  std::vector<double> xs{0, 1, 2}, ys{0, 0, 0}, zs{0, 0, 0};
  std::vector<double> run{5.0, -5.0, 0.5};
  plane_max({xs, ys, zs}, {1.0, 0.0, 0.0, 1.0}, run);  // distance = x - 1
  CHECK(run == std::vector<double>{5.0, 0.0, 1.0});
}
