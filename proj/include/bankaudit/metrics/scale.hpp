#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bankaudit/core/vec.hpp"
#include "bankaudit/intervals/interval.hpp"

namespace bankaudit::metrics {

using intervals::MeasureAxis;
using intervals::PlausibleInterval;

enum class DecayKind { gaussian, linear, lorentzian };
inline constexpr std::array<DecayKind, 3> kAllDecays{DecayKind::gaussian, DecayKind::linear, DecayKind::lorentzian};

std::string_view to_string(DecayKind d) noexcept;
DecayKind parse_decay(std::string_view s);

struct AssetMeasurement {
  std::string asset_id;
  double x = 0.0;  // meters
  MeasureAxis axis = MeasureAxis::z_height;
};

// 0 inside [lower, upper], otherwise the distance to the nearer bound.
// Throws Error(InvalidArgument) for negative or non-finite x.
double boundary_distance(double x, const PlausibleInterval& iv);

// 1 exactly when x lies in the interval. Outside it the score is capped one
// ulp below 1 so that tiny distances never round up to a perfect score.
double sps(double x, const PlausibleInterval& iv, DecayKind decay = DecayKind::gaussian);

// Decay as a function of t = d / h >= 0, no capping.
double decay_value(double t, DecayKind decay);

struct CategoryScaleStats {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double cv = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double trimmed_mean = 0.0;
  double pct_plausible = 0.0;
  double mean_sps = 0.0;
  double pct_perfect = 0.0;
};

// Throws Error(EmptyCategory) for an empty list, Error(InvalidArgument) for
// trim outside [0, 0.5).
CategoryScaleStats category_stats(std::span<const AssetMeasurement> ms, const PlausibleInterval& iv,
                                  DecayKind decay = DecayKind::gaussian, double trim = 0.05);

// Items removed from each tail: floor(trim * n), guarded against products
// like 0.57 * 100 landing just under an integer.
std::size_t trim_count(double trim, std::size_t n);

// Tau-b. Zero when either input is constant. Throws Error(LengthMismatch)
// for unequal lengths and Error(InvalidArgument) for fewer than two items.
double kendall_tau(std::span<const double> a, std::span<const double> b);

// Descending ranks starting at 1, ties share the average rank.
std::vector<double> descending_ranks(std::span<const double> values);

struct DecayMeans {
  std::string category;
  std::array<double, 3> mean_sps{};  // indexed like kAllDecays
};

struct TauPair {
  DecayKind a;
  DecayKind b;
  double tau;
};

struct SensitivityReport {
  std::vector<DecayMeans> per_category;
  std::array<std::vector<double>, 3> ranks;
  std::vector<TauPair> kendall_tau;  // (G,L), (G,Lor), (L,Lor)
};

SensitivityReport sensitivity_report(std::vector<DecayMeans> per_category);

// Release gate: l/3 <= x <= 3u.
bool scale_gate(double x, const PlausibleInterval& iv);

// Dimension measured for `axis` from a bbox extent.
double measure(Vec3 extent, MeasureAxis axis);

}  // namespace bankaudit::metrics
