#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "bankaudit/core/error.hpp"
#include "bankaudit/metrics/scale.hpp"

using namespace bankaudit;
using namespace bankaudit::metrics;

namespace {

PlausibleInterval iv(double l, double u) { return intervals::manual_interval("c", l, u); }

std::vector<AssetMeasurement> heights(std::vector<double> xs) {
  std::vector<AssetMeasurement> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({"a" + std::to_string(i), xs[i]});
  return out;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoFailure;
}

// Tau-b from tie-group sizes, independent of the pair classification.
double tau_b_reference(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double nc = 0, nd = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double s = (a[i] - a[j]) * (b[i] - b[j]);
      if (s > 0) nc += 1;
      if (s < 0) nd += 1;
    }
  auto tie_term = [](const std::vector<double>& v) {
    std::map<double, double> groups;
    for (double x : v) groups[x] += 1;
    double t = 0;
    for (auto& [k, c] : groups) t += c * (c - 1) / 2;
    return t;
  };
  const double n0 = n * (n - 1) / 2.0;
  const double denom = std::sqrt((n0 - tie_term(a)) * (n0 - tie_term(b)));
  return denom == 0 ? 0.0 : (nc - nd) / denom;
}

}  // namespace

TEST_CASE("boundary_distance") {
  const auto seat = iv(0.6, 1.1);
  CHECK(boundary_distance(0.8, seat) == 0.0);
  CHECK(boundary_distance(0.5, seat) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(boundary_distance(1.3, seat) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(boundary_distance(0.6, seat) == 0.0);
  CHECK(boundary_distance(1.1, seat) == 0.0);
  CHECK(kind_of([&] { boundary_distance(-1.0, seat); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([&] { boundary_distance(std::nan(""), seat); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("sps examples") {
  const auto r = iv(1.0, 3.0);  // h = 1
  for (auto d : kAllDecays) {
    CHECK(sps(2.0, r, d) == 1.0);
    CHECK(sps(1.0, r, d) == 1.0);
    CHECK(sps(3.0, r, d) == 1.0);
  }
  CHECK(sps(4.0, r, DecayKind::gaussian) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(sps(4.0, r, DecayKind::gaussian) == doctest::Approx(0.37).epsilon(0.01));
  CHECK(sps(5.0, r, DecayKind::gaussian) == doctest::Approx(std::exp(-4.0)).epsilon(1e-15));
  CHECK(sps(5.0, r, DecayKind::gaussian) == doctest::Approx(0.02).epsilon(0.1));
  CHECK(sps(4.0, r, DecayKind::lorentzian) == 0.5);
  CHECK(sps(4.0, r, DecayKind::linear) == 0.0);
  CHECK(sps(3.5, r, DecayKind::linear) == 0.5);
  CHECK(sps(0.5, r, DecayKind::linear) == 0.5);
}

TEST_CASE("sps is 1 exactly when the distance is 0") {
  const auto r = iv(0.6, 1.1);
  for (auto d : kAllDecays) {
    CHECK(sps(std::nextafter(1.1, 2.0), r, d) < 1.0);
    CHECK(sps(std::nextafter(0.6, 0.0), r, d) < 1.0);
    CHECK(sps(1.1 + 1e-12, r, d) < 1.0);
  }
}

TEST_CASE("decay properties") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logu(-6, 6);
  std::uniform_real_distribution<double> logs(-9, 9);
  for (int trial = 0; trial < 2000; ++trial) {
    const double l = std::pow(10.0, logu(rng));
    const double u = l * (1.0 + std::pow(10.0, logu(rng) / 3));
    const auto r = iv(l, u);
    const double h = r.half_width();
    // Monotone non-increasing in d.
    std::vector<double> ds(8);
    for (auto& d : ds) d = h * std::pow(10.0, logu(rng) / 2);
    std::sort(ds.begin(), ds.end());
    for (auto dk : kAllDecays) {
      double prev = 1.0;
      for (double d : ds) {
        const double v = sps(u + d, r, dk);
        CHECK(v <= prev);
        CHECK(v >= 0.0);
        CHECK(v < 1.0);
        prev = v;
      }
    }
    // Scale invariance of d/h.
    const double s = std::pow(10.0, logs(rng));
    const double x = u + ds[3];
    const auto rs = iv(l * s, u * s);
    for (auto dk : kAllDecays) {
      CHECK(sps(x * s, rs, dk) == doctest::Approx(sps(x, r, dk)).epsilon(1e-9));
    }
    // Gaussian below Lorentzian, linear below Lorentzian up to d = h.
    for (double t : {ds[0] / h, ds[4] / h, ds[7] / h}) {
      CHECK(decay_value(t, DecayKind::gaussian) <= decay_value(t, DecayKind::lorentzian));
      if (t <= 1.0) CHECK(decay_value(t, DecayKind::linear) <= decay_value(t, DecayKind::lorentzian));
    }
  }
}

TEST_CASE("category_stats examples") {
  const auto seat = iv(0.6, 1.1);
  const auto a = heights({1, 1, 1});
  CHECK(category_stats(a, seat).cv == 0.0);

  const auto b = heights({1, 2, 3});
  const auto sb = category_stats(b, seat);
  CHECK(sb.mean == 2.0);
  CHECK(sb.stddev == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(sb.cv == doctest::Approx(0.4082).epsilon(1e-4));
  CHECK(sb.median == 2.0);

  std::vector<double> v;
  for (int i = 1; i <= 20; ++i) v.push_back(i);
  CHECK(category_stats(heights(v), seat, DecayKind::gaussian, 0.05).trimmed_mean == 10.5);

  const auto c = category_stats(heights({0.5, 0.7, 1.0, 2.0}), seat);
  CHECK(c.pct_plausible == 50.0);
  CHECK(c.pct_perfect == 50.0);
  CHECK(c.median == 0.85);
  CHECK(c.min == 0.5);
  CHECK(c.max == 2.0);

  CHECK(kind_of([&] { category_stats(std::vector<AssetMeasurement>{}, seat); }) == ErrorKind::EmptyCategory);
  CHECK(kind_of([&] { category_stats(b, seat, DecayKind::gaussian, 0.5); }) == ErrorKind::InvalidArgument);
  CHECK(trim_count(0.57, 100) == 57);
  CHECK(trim_count(0.05, 19) == 0);
}

TEST_CASE("category_stats matches a one-pass reference") {
  std::mt19937_64 rng(13);
  std::lognormal_distribution<double> height(0.0, 0.8);
  for (std::size_t n : {1, 2, 3, 7, 20, 99, 100, 513, 1000}) {
    for (auto dk : kAllDecays) {
      std::vector<double> xs(n);
      for (auto& x : xs) x = height(rng);
      const auto r = iv(0.6, 1.1);
      const auto s = category_stats(heights(xs), r, dk, 0.05);

      long double sum = 0, sumsq = 0, sps_sum = 0;
      std::size_t inside = 0, perfect = 0;
      double lo = xs[0], hi = xs[0];
      for (double x : xs) {
        sum += x;
        sumsq += static_cast<long double>(x) * x;
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        inside += (x >= 0.6 && x <= 1.1);
        const double d = x < 0.6 ? 0.6 - x : (x > 1.1 ? x - 1.1 : 0.0);
        const double t = d / 0.25;
        const double f = dk == DecayKind::gaussian ? std::exp(-t * t)
                         : dk == DecayKind::linear ? std::max(0.0, 1 - t)
                                                   : 1 / (1 + t * t);
        sps_sum += (d == 0 ? 1.0 : f);
        perfect += d == 0;
      }
      const double mean = static_cast<double>(sum / n);
      const double var = static_cast<double>(sumsq / n - (sum / n) * (sum / n));
      CHECK(s.n == n);
      CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
      if (n > 1) CHECK(s.stddev == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
      CHECK(s.min == lo);
      CHECK(s.max == hi);
      CHECK(s.mean_sps == doctest::Approx(static_cast<double>(sps_sum / n)).epsilon(1e-12));
      CHECK(s.pct_plausible == doctest::Approx(100.0 * inside / n).epsilon(1e-12));
      CHECK(s.pct_perfect == s.pct_plausible);

      auto sorted = xs;
      std::sort(sorted.begin(), sorted.end());
      const double med = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
      CHECK(s.median == doctest::Approx(med).epsilon(1e-15));
      const std::size_t k = n * 5 / 100;
      long double tsum = 0;
      for (std::size_t i = k; i < n - k; ++i) tsum += sorted[i];
      CHECK(s.trimmed_mean == doctest::Approx(static_cast<double>(tsum / (n - 2 * k))).epsilon(1e-12));
    }
  }
}

TEST_CASE("kendall_tau") {
  std::vector<double> r9{1, 2, 3, 4, 5, 6, 7, 8, 9};
  CHECK(kendall_tau(r9, r9) == 1.0);
  CHECK(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == -1.0);
  CHECK(kendall_tau(std::vector<double>{1, 2, 3}, std::vector<double>{1, 3, 2}) == doctest::Approx(1.0 / 3.0));
  CHECK(kind_of([] { kendall_tau(std::vector<double>{1, 2}, std::vector<double>{1}); }) == ErrorKind::LengthMismatch);
  CHECK(kendall_tau(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}) == 0.0);

  std::mt19937_64 rng(19);
  std::uniform_int_distribution<int> small(0, 4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + trial % 15;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = small(rng);
      b[i] = small(rng);
    }
    const double t = kendall_tau(a, b);
    CHECK(std::abs(t) <= 1.0);
    CHECK(t == doctest::Approx(tau_b_reference(a, b)).epsilon(1e-12));
    CHECK(kendall_tau(b, a) == doctest::Approx(t).epsilon(1e-15));
  }
}

TEST_CASE("sensitivity report over the published category means") {
  const std::vector<DecayMeans> table{
      {"Architecture", {0.988, 0.900, 0.950}},     {"Nature (Flora)", {0.981, 0.890, 0.940}},
      {"Storage Furniture", {0.980, 0.880, 0.930}}, {"Animal", {0.904, 0.800, 0.880}},
      {"Seating", {0.812, 0.720, 0.790}},           {"Electronics", {0.768, 0.680, 0.750}},
      {"Vehicle", {0.762, 0.670, 0.740}},           {"Table / Desk", {0.672, 0.580, 0.650}},
      {"Tableware", {0.479, 0.400, 0.450}},
  };
  const auto r = sensitivity_report(table);
  const std::vector<double> expected{1, 2, 3, 4, 5, 6, 7, 8, 9};
  for (const auto& ranks : r.ranks) CHECK(ranks == expected);
  REQUIRE(r.kendall_tau.size() == 3);
  for (const auto& p : r.kendall_tau) CHECK(p.tau == 1.0);

  const auto tied = sensitivity_report({{"a", {0.9, 0.8, 0.8}}, {"b", {0.9, 0.7, 0.9}}, {"c", {0.5, 0.6, 0.7}}});
  CHECK(tied.ranks[0] == std::vector<double>{1.5, 1.5, 3});
  for (const auto& p : tied.kendall_tau) CHECK(std::abs(p.tau) <= 1.0);

  const auto twice = sensitivity_report({{"a", {0.9, 0.9, 0.9}}, {"b", {0.3, 0.3, 0.3}}});
  for (const auto& p : twice.kendall_tau) CHECK(p.tau == 1.0);
}

TEST_CASE("scale gate envelope") {
  const auto seat = iv(0.6, 1.1);
  CHECK(scale_gate(0.8, seat));
  CHECK_FALSE(scale_gate(0.19, seat));
  CHECK_FALSE(scale_gate(3.4, seat));
  CHECK(scale_gate(0.2, seat));
  CHECK(scale_gate(3.3, seat));
}

TEST_CASE("measurement axis") {
  CHECK(measure({1, 2, 0.5}, MeasureAxis::z_height) == 0.5);
  CHECK(measure({1, 2, 0.5}, MeasureAxis::max_extent) == 2.0);
}
