#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bankaudit/core/error.hpp"
#include "bankaudit/crossmodal/embeddings.hpp"
#include "bankaudit/geometry/analysis.hpp"
#include "bankaudit/geometry/convex_hull.hpp"
#include "bankaudit/ingest/gltf_mesh.hpp"
#include "bankaudit/ingest/manifest.hpp"
#include "bankaudit/intervals/interval.hpp"
#include "bankaudit/metrics/anchor.hpp"
#include "bankaudit/metrics/scale.hpp"
#include "bankaudit/text/text_metrics.hpp"

namespace bankaudit::report {

struct GateConfig {
  bool require_watertight = true;
  double max_degenerate_fraction = 0.01;
  std::size_t min_faces = 100;
  std::size_t max_faces = 200000;
};

struct AuditConfig {
  metrics::DecayKind decay = metrics::DecayKind::gaussian;
  double trim = 0.05;
  intervals::MeasureAxis axis = intervals::MeasureAxis::z_height;
  metrics::AnchorOptions anchor;
  GateConfig gates;
  bool allow_missing_intervals = false;
  unsigned jobs = 1;
  double coherence_bin_width = 0.01;
  // Query the forward-axis classifier one asset at a time in manifest order,
  // so a shared call budget is spent deterministically.
  bool forward_sequential = false;
};

enum class GateOutcome { pass, fail, skipped };
std::string_view to_string(GateOutcome g) noexcept;
GateOutcome parse_gate_outcome(std::string_view s);

struct GateResults {
  GateOutcome geometric = GateOutcome::skipped;
  GateOutcome scale = GateOutcome::skipped;
  GateOutcome forward_axis = GateOutcome::skipped;
  // Every non-skipped gate passed.
  bool all_pass() const;
  bool operator==(const GateResults&) const = default;
};

struct MaterialSummary {
  std::size_t texture_count = 0;
  double mean_texture_size = 0.0;
  bool has_basecolor = false;
  bool has_normal = false;
  bool has_roughness = false;
  bool operator==(const MaterialSummary&) const = default;
};

struct AuditRecord {
  std::string asset_id;
  std::string category;
  std::string subcategory;
  ingest::AnchorType anchor_type = ingest::AnchorType::bottom;
  intervals::MeasureAxis axis = intervals::MeasureAxis::z_height;
  Vec3 bbox_min;
  Vec3 bbox_max;
  double x = 0.0;  // measured dimension, meters
  bool has_interval = false;
  double lower = 0.0;
  double upper = 0.0;
  std::array<double, 3> sps{};  // indexed like metrics::kAllDecays; zeros without an interval
  bool plausible = false;
  geometry::HealthFlags health;
  metrics::AnchorReport anchor;
  std::optional<geometry::HullReport> hull;
  std::string hull_error;
  text::AssetText text;
  std::vector<std::string> meaningful_tokens;
  std::optional<metrics::ForwardAxisResult> forward;
  std::string forward_error;
  std::optional<double> coherence_text_ref;
  std::optional<double> coherence_text_3d;
  std::optional<double> coherence_ref_3d;
  MaterialSummary material;
  GateResults gates;
  std::vector<std::string> warnings;
};

struct AssetFailure {
  std::string asset_id;
  ErrorKind kind = ErrorKind::IoFailure;
  std::string message;
  bool operator==(const AssetFailure&) const = default;
};

struct CategoryRow {
  std::string category;
  double lower = 0.0;
  double upper = 0.0;
  std::string axis;
  metrics::CategoryScaleStats stats;
};

struct PairSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

struct Dashboard {
  std::size_t assets = 0;  // manifest entries
  std::size_t records = 0;
  std::size_t failures = 0;
  std::map<std::string, std::size_t> failures_by_kind;

  std::size_t scored = 0;  // records with an interval
  double mean_sps = 0.0;
  double pct_plausible = 0.0;
  double mean_cv = 0.0;  // over categories with at least two records
  std::vector<CategoryRow> categories;
  std::vector<std::string> categories_without_interval;
  std::optional<metrics::SensitivityReport> sensitivity;

  double pct_watertight = 0.0;
  double pct_manifold = 0.0;
  double pct_uv = 0.0;
  double mean_degenerate_fraction = 0.0;
  double mean_faces = 0.0;
  double median_faces = 0.0;

  metrics::AnchorAggregate anchor;

  std::size_t hulls = 0;
  double mean_hull_containment = 0.0;
  double mean_hull_coverage = 0.0;  // over finite coverages
  std::size_t hull_triangles_median = 0;

  std::optional<PairSummary> coherence_text_ref;
  std::optional<PairSummary> coherence_text_3d;
  std::optional<PairSummary> coherence_ref_3d;

  double mean_clip_tokens = 0.0;
  double mean_description_tokens = 0.0;
  std::size_t vocab_size = 0;
  double mean_concept_density = 0.0;
  std::array<double, 5> axis_coverage{};

  std::array<double, 3> gate_pass_rate{};  // percent of evaluated, per gate
  std::array<std::size_t, 3> gate_evaluated{};
  double overall_pass_rate = 0.0;  // percent of records passing all evaluated gates
};

struct TextResources {
  const text::TokenizerModel* tokenizer = nullptr;
  const text::Stopwords* stopwords = nullptr;
  const text::KeywordBanks* banks = nullptr;
};

struct AuditInputs {
  std::vector<ingest::ManifestEntry> manifest;
  intervals::IntervalFile intervals;
  TextResources text;
  metrics::FrontClassifier* classifier = nullptr;
  const crossmodal::EmbeddingTable* embeddings = nullptr;
};

struct AuditResult {
  std::vector<AuditRecord> records;
  std::vector<AssetFailure> failures;
  Dashboard dashboard;
};

geometry::MeshGeometry load_asset_mesh(const ingest::ManifestEntry& e, std::vector<std::string>* warnings = nullptr,
                                       ingest::MaterialProbe* material = nullptr);
std::optional<geometry::MeshGeometry> load_hull_mesh(const ingest::ManifestEntry& e);

GateResults curation_gates(const AuditRecord& r, const GateConfig& cfg, const intervals::PlausibleInterval* iv);

// Throws Error(EmptyDataset) for an empty manifest and Error(MissingInterval)
// naming the first uncovered category unless allowed. Per-asset problems end
// up in failures.
AuditResult run_audit(const AuditInputs& in, const AuditConfig& cfg);

// Pure fold over records; the dashboard in an AuditResult is exactly this.
Dashboard build_dashboard(const std::vector<AuditRecord>& records, const std::vector<AssetFailure>& failures,
                          std::size_t manifest_size, const AuditConfig& cfg);

}  // namespace bankaudit::report
