#include "bankaudit/metrics/scale.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bankaudit/core/error.hpp"

namespace bankaudit::metrics {

std::string_view to_string(DecayKind d) noexcept {
  switch (d) {
    case DecayKind::gaussian: return "gaussian";
    case DecayKind::linear: return "linear";
    case DecayKind::lorentzian: return "lorentzian";
  }
  return "gaussian";
}

DecayKind parse_decay(std::string_view s) {
  if (s == "gaussian") return DecayKind::gaussian;
  if (s == "linear") return DecayKind::linear;
  if (s == "lorentzian") return DecayKind::lorentzian;
  fail(ErrorKind::BadConfig, "decay must be gaussian, linear or lorentzian, got '" + std::string(s) + "'");
}

double boundary_distance(double x, const PlausibleInterval& iv) {
  if (!std::isfinite(x) || x < 0.0) fail(ErrorKind::InvalidArgument, "measured dimension must be finite and >= 0");
  if (x < iv.lower) return iv.lower - x;
  if (x > iv.upper) return x - iv.upper;
  return 0.0;
}

double decay_value(double t, DecayKind decay) {
  switch (decay) {
    case DecayKind::gaussian: return std::exp(-(t * t));
    case DecayKind::linear: return std::max(0.0, 1.0 - t);
    case DecayKind::lorentzian: return 1.0 / (1.0 + t * t);
  }
  return 0.0;
}

double sps(double x, const PlausibleInterval& iv, DecayKind decay) {
  const double d = boundary_distance(x, iv);
  if (d == 0.0) return 1.0;
  const double v = decay_value(d / iv.half_width(), decay);
  return std::min(v, std::nextafter(1.0, 0.0));
}

std::size_t trim_count(double trim, std::size_t n) {
  return static_cast<std::size_t>(std::floor(trim * static_cast<double>(n) + 1e-9));
}

CategoryScaleStats category_stats(std::span<const AssetMeasurement> ms, const PlausibleInterval& iv,
                                  DecayKind decay, double trim) {
  if (ms.empty()) fail(ErrorKind::EmptyCategory, "no measurements for '" + iv.category + "'");
  if (!(trim >= 0.0 && trim < 0.5)) fail(ErrorKind::InvalidArgument, "trim must lie in [0, 0.5)");

  std::vector<double> xs;
  xs.reserve(ms.size());
  for (const auto& m : ms) xs.push_back(m.x);
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  const double dn = static_cast<double>(n);

  CategoryScaleStats s;
  s.n = n;
  s.min = xs.front();
  s.max = xs.back();
  s.median = n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / dn;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / dn);
  s.cv = s.mean > 0.0 ? s.stddev / s.mean : std::nan("");

  const std::size_t k = trim_count(trim, n);
  s.trimmed_mean = std::accumulate(xs.begin() + k, xs.end() - k, 0.0) / static_cast<double>(n - 2 * k);

  std::size_t inside = 0, perfect = 0;
  double sps_sum = 0.0;
  for (const auto& m : ms) {
    inside += m.x >= iv.lower && m.x <= iv.upper;
    const double v = sps(m.x, iv, decay);
    perfect += v == 1.0;
    sps_sum += v;
  }
  s.pct_plausible = 100.0 * static_cast<double>(inside) / dn;
  s.pct_perfect = 100.0 * static_cast<double>(perfect) / dn;
  s.mean_sps = sps_sum / dn;
  return s;
}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::LengthMismatch, "kendall_tau inputs differ in length");
  if (a.size() < 2) fail(ErrorKind::InvalidArgument, "kendall_tau needs at least two items");
  // O(n^2) is fine for category counts.
  long long concordant = 0, discordant = 0, tie_a = 0, tie_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ++tie_a;
      } else if (db == 0.0) {
        ++tie_b;
      } else if ((da > 0) == (db > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n0a = static_cast<double>(concordant + discordant + tie_b);  // pairs untied in a
  const double n0b = static_cast<double>(concordant + discordant + tie_a);  // pairs untied in b
  if (n0a == 0.0 || n0b == 0.0) return 0.0;
  const double tau = static_cast<double>(concordant - discordant) / std::sqrt(n0a * n0b);
  return std::clamp(tau, -1.0, 1.0);
}

std::vector<double> descending_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] > values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

SensitivityReport sensitivity_report(std::vector<DecayMeans> per_category) {
  if (per_category.size() < 2) fail(ErrorKind::InvalidArgument, "sensitivity needs at least two categories");
  SensitivityReport r;
  r.per_category = std::move(per_category);
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> col;
    for (const auto& c : r.per_category) col.push_back(c.mean_sps[k]);
    r.ranks[k] = descending_ranks(col);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      r.kendall_tau.push_back({kAllDecays[i], kAllDecays[j], kendall_tau(r.ranks[i], r.ranks[j])});
    }
  }
  return r;
}

bool scale_gate(double x, const PlausibleInterval& iv) {
  // Multiplied form: 0.6 / 3 rounds below 0.2 in binary floating point.
  return 3.0 * x >= iv.lower && x <= 3.0 * iv.upper;
}

double measure(Vec3 extent, MeasureAxis axis) {
  if (axis == MeasureAxis::z_height) return extent.z;
  return std::max({extent.x, extent.y, extent.z});
}

}  // namespace bankaudit::metrics
