#include "bankaudit/intervals/interval.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <fcntl.h>
#include <limits>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/io.hpp"

namespace bankaudit::intervals {

using nlohmann::json;

std::string_view to_string(Provenance p) noexcept { return p == Provenance::judged ? "judged" : "manual"; }

Provenance parse_provenance(std::string_view s) {
  if (s == "judged") return Provenance::judged;
  if (s == "manual") return Provenance::manual;
  fail(ErrorKind::BadIntervalFile, "provenance must be judged or manual, got '" + std::string(s) + "'");
}

std::string_view to_string(MeasureAxis a) noexcept { return a == MeasureAxis::max_extent ? "max" : "z"; }

MeasureAxis parse_measure_axis(std::string_view s) {
  if (s == "z") return MeasureAxis::z_height;
  if (s == "max") return MeasureAxis::max_extent;
  fail(ErrorKind::BadConfig, "axis must be z or max, got '" + std::string(s) + "'");
}

std::vector<double> PlausibleInterval::run_estimates_m() const {
  std::vector<double> out;
  for (auto cm : run_estimates_cm) out.push_back(static_cast<double>(cm) / 100.0);
  return out;
}

PlausibleInterval manual_interval(std::string category, double lower_m, double upper_m) {
  if (!(lower_m > 0.0) || !(upper_m > lower_m) || !std::isfinite(upper_m)) {
    fail(ErrorKind::BadIntervalFile, "interval for '" + category + "' must satisfy 0 < lower < upper");
  }
  PlausibleInterval iv;
  iv.category = std::move(category);
  iv.lower = lower_m;
  iv.upper = upper_m;
  return iv;
}

PlausibleInterval interval_from_runs(std::span<const std::int64_t> estimates_cm, std::string category) {
  if (estimates_cm.empty()) fail(ErrorKind::EmptyRuns, "no judge estimates");
  constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max() / 13;
  for (auto d : estimates_cm) {
    if (d <= 0) fail(ErrorKind::NonPositiveEstimate, "estimate " + std::to_string(d) + " cm");
    if (d > kMax) fail(ErrorKind::InvalidArgument, "estimate " + std::to_string(d) + " cm out of range");
  }
  const auto [lo, hi] = std::minmax_element(estimates_cm.begin(), estimates_cm.end());
  PlausibleInterval iv;
  iv.category = std::move(category);
  // 0.7 d cm = 7 d / 1000 m; integer numerators keep the bounds correctly rounded.
  iv.lower = static_cast<double>(7 * *lo) / 1000.0;
  iv.upper = static_cast<double>(13 * *hi) / 1000.0;
  iv.provenance = Provenance::judged;
  iv.run_estimates_cm.assign(estimates_cm.begin(), estimates_cm.end());
  return iv;
}

const PlausibleInterval* IntervalFile::find(std::string_view category) const {
  auto it = entries.find(std::string(category));
  return it == entries.end() ? nullptr : &it->second;
}

IntervalFile parse_interval_file(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::BadIntervalFile, std::string("does not parse: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("version") || !doc.contains("entries")) {
    fail(ErrorKind::BadIntervalFile, "expected an object with version and entries");
  }
  if (!doc["version"].is_number_integer() || doc["version"].get<int>() != IntervalFile::kVersion) {
    fail(ErrorKind::BadIntervalFile, "unsupported version " + doc["version"].dump());
  }
  if (!doc["entries"].is_array()) fail(ErrorKind::BadIntervalFile, "entries must be an array");

  IntervalFile out;
  std::size_t idx = 0;
  for (const auto& e : doc["entries"]) {
    const std::string where = " (entry " + std::to_string(idx++) + ")";
    try {
      const std::string cat = e.at("category").get<std::string>();
      if (cat.empty()) fail(ErrorKind::BadIntervalFile, "empty category" + where);
      auto iv = manual_interval(cat, e.at("lower_m").get<double>(), e.at("upper_m").get<double>());
      if (e.contains("axis")) iv.axis = parse_measure_axis(e["axis"].get<std::string>());
      iv.provenance = parse_provenance(e.at("provenance").get<std::string>());
      if (e.contains("run_estimates_cm")) iv.run_estimates_cm = e["run_estimates_cm"].get<std::vector<std::int64_t>>();
      if (iv.provenance == Provenance::judged) {
        const auto check = interval_from_runs(iv.run_estimates_cm);
        if (check.lower != iv.lower || check.upper != iv.upper) {
          fail(ErrorKind::BadIntervalFile, "judged bounds disagree with run_estimates_cm" + where);
        }
      }
      if (!out.entries.emplace(cat, std::move(iv)).second) {
        fail(ErrorKind::BadIntervalFile, "duplicate category '" + cat + "'" + where);
      }
    } catch (const json::exception& ex) {
      fail(ErrorKind::BadIntervalFile, std::string(ex.what()) + where);
    } catch (const Error& ex) {
      if (ex.kind() == ErrorKind::BadIntervalFile) throw;
      fail(ErrorKind::BadIntervalFile, std::string(ex.what()) + where);
    }
  }
  return out;
}

IntervalFile load_interval_file(const std::filesystem::path& path) {
  return parse_interval_file(read_file_text(path));
}

std::string dump_interval_file(const IntervalFile& f) {
  json entries = json::array();
  for (const auto& [cat, iv] : f.entries) {
    json e{{"category", cat},
           {"lower_m", iv.lower},
           {"upper_m", iv.upper},
           {"provenance", to_string(iv.provenance)},
           {"run_estimates_cm", iv.run_estimates_cm}};
    if (iv.axis) e["axis"] = to_string(*iv.axis);
    entries.push_back(std::move(e));
  }
  return json{{"version", IntervalFile::kVersion}, {"entries", entries}}.dump(2) + "\n";
}

IntervalCache::IntervalCache(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) file_ = load_interval_file(path_);
}

std::optional<PlausibleInterval> IntervalCache::get(const std::string& category) const {
  std::lock_guard lk(mu_);
  if (const auto* iv = file_.find(category)) return *iv;
  return std::nullopt;
}

void IntervalCache::claim(const std::string& category, bool refresh) {
  std::lock_guard lk(mu_);
  if (claimed_.count(category)) fail(ErrorKind::ConcurrentWrite, "'" + category + "' is already being derived");
  if (written_.count(category)) fail(ErrorKind::ConcurrentWrite, "'" + category + "' was already written");
  if (!refresh && file_.find(category)) {
    fail(ErrorKind::ConcurrentWrite, "'" + category + "' is cached; pass refresh to replace it");
  }
  claimed_.insert(category);
}

void IntervalCache::release(const std::string& category) {
  std::lock_guard lk(mu_);
  claimed_.erase(category);
}

void IntervalCache::commit(PlausibleInterval iv) {
  std::lock_guard lk(mu_);
  if (!claimed_.count(iv.category)) fail(ErrorKind::ConcurrentWrite, "'" + iv.category + "' was not claimed");
  claimed_.erase(iv.category);
  written_.insert(iv.category);
  file_.entries[iv.category] = std::move(iv);
}

void IntervalCache::save() const {
  const std::string text = [&] {
    std::lock_guard lk(mu_);
    return dump_interval_file(file_);
  }();
  auto lock = path_;
  lock += ".lock";
  const int fd = ::open(lock.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    if (errno == EEXIST) fail(ErrorKind::ConcurrentWrite, "another writer holds " + lock.string());
    fail(ErrorKind::IoFailure, "cannot create " + lock.string());
  }
  ::close(fd);
  auto tmp = path_;
  tmp += ".tmp";
  try {
    write_file_text(tmp, text);
    std::filesystem::rename(tmp, path_);
  } catch (...) {
    std::filesystem::remove(lock);
    throw;
  }
  std::filesystem::remove(lock);
}

IntervalFile IntervalCache::snapshot() const {
  std::lock_guard lk(mu_);
  return file_;
}

}  // namespace bankaudit::intervals
