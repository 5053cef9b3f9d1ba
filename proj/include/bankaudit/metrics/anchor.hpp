#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bankaudit/core/vec.hpp"
#include "bankaudit/geometry/analysis.hpp"
#include "bankaudit/geometry/mesh.hpp"
#include "bankaudit/ingest/manifest.hpp"

namespace bankaudit::metrics {

using geometry::Aabb;
using geometry::MeshGeometry;
using ingest::AnchorType;

enum class AnchorMode { declared, nearest_canonical };

std::string_view to_string(AnchorMode m) noexcept;
// Accepts "declared" and "nearest".
AnchorMode parse_anchor_mode(std::string_view s);

struct CanonicalAnchor {
  Vec3 point;
  // Center anchors: false when the vertex-average fallback was used.
  bool volumetric = true;
};

// bottom/top: bbox center in XY at Z_min/Z_max. center: volumetric centroid
// for closed, consistently wound meshes with nonzero volume, otherwise the
// mean of referenced vertices. Throws Error(EmptyMesh).
CanonicalAnchor canonical_anchor(const MeshGeometry& m, AnchorType type);

// Per-axis [p, 100 - p] percentiles (linear interpolation) of referenced
// vertex coordinates. Throws Error(EmptyMesh), Error(InvalidArgument) for p
// outside [0, 50].
Aabb robust_bbox(const MeshGeometry& m, double trim_pct = 1.0);

// Linear-interpolated percentile of sorted values, q in [0, 100].
double percentile_sorted(std::span<const double> sorted, double q);

struct AnchorOptions {
  AnchorMode mode = AnchorMode::declared;
  double cap_m = 100.0;
  double robust_trim_pct = 1.0;
  // The origin counts as out of box only beyond this fraction of the robust
  // box diagonal.
  double out_of_box_slack = 0.01;
};

struct AnchorReport {
  std::string asset_id;
  double epsilon_anchor = 0.0;
  double raw_epsilon = 0.0;
  Vec3 expected_anchor;
  AnchorType expected_type = AnchorType::bottom;
  AnchorMode mode = AnchorMode::declared;
  bool capped = false;
  bool out_of_box = false;
  bool under_1cm = false;
  bool volumetric_center = true;
};

AnchorReport anchor_error(const MeshGeometry& m, AnchorType declared, const AnchorOptions& opts = {},
                          std::string asset_id = {});

struct AnchorAggregate {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double pct_out_of_box = 0.0;
  double pct_under_1cm = 0.0;
  std::size_t capped = 0;
};

// Throws Error(EmptyDataset) for no reports.
AnchorAggregate aggregate_anchors(std::span<const AnchorReport> reports);

// --- forward axis -----------------------------------------------------------

struct ForwardQuery {
  std::string asset_id;
  int quarter_turns = 0;  // rotation about +Z, counter-clockwise
  const MeshGeometry* mesh = nullptr;
  std::string image_path;
};

// Answers whether the asset rendered at the given rotation shows its front
// along +X. Throws Error(ClassifierUnavailable) when it cannot answer.
class FrontClassifier {
 public:
  virtual ~FrontClassifier() = default;
  virtual bool front_facing(const ForwardQuery& q) = 0;
};

enum class ForwardStatus { accepted, rotated, flagged };
std::string_view to_string(ForwardStatus s) noexcept;

struct ForwardAxisResult {
  ForwardStatus status = ForwardStatus::flagged;
  int quarter_turns = 0;  // rotation that passed; 0 when accepted or flagged
  int queries = 0;
  int rotated_by_deg() const { return 90 * quarter_turns; }
};

ForwardAxisResult forward_axis_audit(const ForwardQuery& base, FrontClassifier& classifier);

// Classifier backed by a JSON object {asset_id: [bool, bool, bool, bool]}
// giving the answer for each quarter turn. Unknown assets are unavailable.
class FixtureClassifier : public FrontClassifier {
 public:
  explicit FixtureClassifier(std::map<std::string, std::vector<bool>> answers);
  static FixtureClassifier from_json_text(std::string_view text);
  bool front_facing(const ForwardQuery& q) override;

 private:
  std::map<std::string, std::vector<bool>> answers_;
};

// POSTs {asset_id, rotation_deg, image_path} to a URL and reads
// {"front_facing": bool}.
class HttpClassifier : public FrontClassifier {
 public:
  HttpClassifier(std::string url, std::chrono::milliseconds timeout);
  bool front_facing(const ForwardQuery& q) override;

 private:
  std::string url_;
  std::chrono::milliseconds timeout_;
};

// Shares a fixed number of classifier calls across assets and threads.
class BudgetedClassifier : public FrontClassifier {
 public:
  BudgetedClassifier(FrontClassifier& inner, long budget);
  bool front_facing(const ForwardQuery& q) override;
  long used() const { return used_.load(); }

 private:
  FrontClassifier& inner_;
  long budget_;
  std::atomic<long> used_{0};
};

}  // namespace bankaudit::metrics
