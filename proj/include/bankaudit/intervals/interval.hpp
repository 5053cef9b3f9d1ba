#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bankaudit::intervals {

enum class Provenance { judged, manual };

std::string_view to_string(Provenance p) noexcept;
Provenance parse_provenance(std::string_view s);

// Which bounding-box dimension an interval bounds.
enum class MeasureAxis { z_height, max_extent };

std::string_view to_string(MeasureAxis a) noexcept;
// Accepts "z" and "max". Throws Error(BadConfig) otherwise.
MeasureAxis parse_measure_axis(std::string_view s);

struct PlausibleInterval {
  std::string category;
  double lower = 0.0;  // meters
  double upper = 0.0;  // meters
  Provenance provenance = Provenance::manual;
  std::vector<std::int64_t> run_estimates_cm;
  // Per-category override of the audit's measurement axis.
  std::optional<MeasureAxis> axis;

  double half_width() const { return (upper - lower) / 2.0; }
  std::vector<double> run_estimates_m() const;
};

// Checks 0 < lower < upper; throws Error(BadIntervalFile) otherwise.
PlausibleInterval manual_interval(std::string category, double lower_m, double upper_m);

// Union of [0.7 d, 1.3 d] over runs, d converted from cm to m.
// Throws Error(EmptyRuns | NonPositiveEstimate).
PlausibleInterval interval_from_runs(std::span<const std::int64_t> estimates_cm, std::string category = {});

struct IntervalFile {
  static constexpr int kVersion = 1;
  std::map<std::string, PlausibleInterval> entries;

  const PlausibleInterval* find(std::string_view category) const;
};

// Throws Error(BadIntervalFile) on schema violations, Error(IoFailure) when unreadable.
IntervalFile parse_interval_file(std::string_view text);
IntervalFile load_interval_file(const std::filesystem::path& path);
std::string dump_interval_file(const IntervalFile& f);

// Write-once store keyed by category. A key may be claimed by one writer at a
// time and committed once per session; a second writer for the same key is
// Error(ConcurrentWrite). Persists via an exclusive lock file next to `path`.
class IntervalCache {
 public:
  explicit IntervalCache(std::filesystem::path path);

  std::optional<PlausibleInterval> get(const std::string& category) const;
  // Claims `category` for writing; `refresh` allows replacing a stored entry.
  void claim(const std::string& category, bool refresh);
  void release(const std::string& category);
  void commit(PlausibleInterval iv);
  // Writes the file atomically. Throws Error(ConcurrentWrite) if another
  // process holds the lock.
  void save() const;

  IntervalFile snapshot() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  IntervalFile file_;
  std::set<std::string> claimed_;
  std::set<std::string> written_;
};

}  // namespace bankaudit::intervals
