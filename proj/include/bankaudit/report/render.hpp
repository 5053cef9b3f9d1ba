#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bankaudit/report/serialize.hpp"

namespace bankaudit::report {

enum class ReportFormat { structured, tabular, prose };
std::string_view to_string(ReportFormat f) noexcept;
ReportFormat parse_report_format(std::string_view s);

// Headline dashboard rows plus the decay and trim settings.
std::string render_prose(const AuditDocument& doc);

// Per-category scale table, one row per category with an interval.
std::string render_category_csv(const AuditDocument& doc);
std::string render_category_markdown(const AuditDocument& doc);

struct HistogramBin {
  std::string group;  // category, coherence pair, or "all"
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

// Heights: ten bins per decade, edges at 10^(k/10) meters, per category.
// Non-positive measurements are dropped.
std::vector<HistogramBin> height_histogram(const std::vector<AuditRecord>& records);
// Face counts: bins [2^k, 2^(k+1)); zero faces land in [0, 1).
std::vector<HistogramBin> face_histogram(const std::vector<AuditRecord>& records);
// Coherence: fixed-width bins over [-1, 1] per pair; empty bins are kept.
std::vector<HistogramBin> coherence_histogram(const std::vector<AuditRecord>& records, double bin_width);
std::string histogram_csv(const std::vector<HistogramBin>& bins);

// Writes audit.json, summary.txt, categories.{csv,md} and
// hist_{heights,faces,coherence}.csv into `dir`. Throws Error(IoFailure).
void write_report_dir(const std::filesystem::path& dir, const nlohmann::json& document);

// Reads <dir>/audit.json.
AuditDocument read_report_dir(const std::filesystem::path& dir);

std::string render(const AuditDocument& doc, const nlohmann::json& raw, ReportFormat f);

}  // namespace bankaudit::report
