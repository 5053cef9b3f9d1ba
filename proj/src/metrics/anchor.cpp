#include "bankaudit/metrics/anchor.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/http.hpp"

namespace bankaudit::metrics {

using nlohmann::json;

std::string_view to_string(AnchorMode m) noexcept { return m == AnchorMode::declared ? "declared" : "nearest"; }

AnchorMode parse_anchor_mode(std::string_view s) {
  if (s == "declared") return AnchorMode::declared;
  if (s == "nearest" || s == "nearest_canonical") return AnchorMode::nearest_canonical;
  fail(ErrorKind::BadConfig, "anchor mode must be declared or nearest, got '" + std::string(s) + "'");
}

CanonicalAnchor canonical_anchor(const MeshGeometry& m, AnchorType type) {
  const Aabb box = geometry::bbox(m);
  const Vec3 c = box.center();
  switch (type) {
    case AnchorType::bottom: return {{c.x, c.y, box.min.z}, true};
    case AnchorType::top: return {{c.x, c.y, box.max.z}, true};
    case AnchorType::center: break;
  }
  const auto h = geometry::health(m);
  if (h.watertight && h.winding_consistent) {
    const auto mom = geometry::volume_moments(m);
    if (mom.signed_volume != 0.0 && std::isfinite(mom.centroid.x)) return {mom.centroid, true};
  }
  const auto ref = geometry::referenced_vertices(m);
  Vec3 sum;
  for (auto i : ref) sum += m.positions[i];
  return {sum / static_cast<double>(ref.size()), false};
}

double percentile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorKind::EmptyMesh, "percentile of no values");
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

Aabb robust_bbox(const MeshGeometry& m, double trim_pct) {
  if (!(trim_pct >= 0.0 && trim_pct <= 50.0)) fail(ErrorKind::InvalidArgument, "robust trim must lie in [0, 50]");
  const auto ref = geometry::referenced_vertices(m);
  if (ref.empty()) fail(ErrorKind::EmptyMesh, "mesh has no vertices");
  Aabb out;
  std::vector<double> vals(ref.size());
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < ref.size(); ++i) vals[i] = m.positions[ref[i]][axis];
    std::sort(vals.begin(), vals.end());
    out.min[axis] = percentile_sorted(vals, trim_pct);
    out.max[axis] = percentile_sorted(vals, 100.0 - trim_pct);
  }
  return out;
}

AnchorReport anchor_error(const MeshGeometry& m, AnchorType declared, const AnchorOptions& opts,
                          std::string asset_id) {
  if (!(opts.cap_m > 0.0)) fail(ErrorKind::InvalidArgument, "anchor cap must be positive");
  AnchorReport r;
  r.asset_id = std::move(asset_id);
  r.mode = opts.mode;

  auto consider = [&](AnchorType t, bool first) {
    const auto a = canonical_anchor(m, t);
    const double e = norm(a.point);
    if (first || e < r.raw_epsilon) {
      r.raw_epsilon = e;
      r.expected_anchor = a.point;
      r.expected_type = t;
      r.volumetric_center = a.volumetric;
    }
  };
  if (opts.mode == AnchorMode::declared) {
    consider(declared, true);
  } else {
    // Declared type first so that exact ties keep it.
    consider(declared, true);
    for (auto t : {AnchorType::bottom, AnchorType::center, AnchorType::top}) {
      if (t != declared) consider(t, false);
    }
  }
  r.capped = r.raw_epsilon > opts.cap_m;
  r.epsilon_anchor = r.capped ? opts.cap_m : r.raw_epsilon;
  r.under_1cm = r.epsilon_anchor < 0.01;

  const Aabb rb = robust_bbox(m, opts.robust_trim_pct);
  r.out_of_box = !rb.contains(Vec3{}, opts.out_of_box_slack * rb.diagonal());
  return r;
}

AnchorAggregate aggregate_anchors(std::span<const AnchorReport> reports) {
  if (reports.empty()) fail(ErrorKind::EmptyDataset, "no anchor reports");
  AnchorAggregate a;
  a.n = reports.size();
  std::vector<double> eps;
  std::size_t oob = 0, under = 0;
  double sum = 0.0;
  for (const auto& r : reports) {
    eps.push_back(r.epsilon_anchor);
    sum += r.epsilon_anchor;
    oob += r.out_of_box;
    under += r.under_1cm;
    a.capped += r.capped;
  }
  std::sort(eps.begin(), eps.end());
  const std::size_t n = eps.size();
  a.mean = sum / static_cast<double>(n);
  a.median = n % 2 ? eps[n / 2] : (eps[n / 2 - 1] + eps[n / 2]) / 2.0;
  a.pct_out_of_box = 100.0 * static_cast<double>(oob) / static_cast<double>(n);
  a.pct_under_1cm = 100.0 * static_cast<double>(under) / static_cast<double>(n);
  return a;
}

std::string_view to_string(ForwardStatus s) noexcept {
  switch (s) {
    case ForwardStatus::accepted: return "accepted";
    case ForwardStatus::rotated: return "rotated";
    case ForwardStatus::flagged: return "flagged";
  }
  return "flagged";
}

ForwardAxisResult forward_axis_audit(const ForwardQuery& base, FrontClassifier& classifier) {
  ForwardAxisResult out;
  for (int k = 0; k < 4; ++k) {
    ForwardQuery q = base;
    q.quarter_turns = k;
    ++out.queries;
    if (classifier.front_facing(q)) {
      out.status = k == 0 ? ForwardStatus::accepted : ForwardStatus::rotated;
      out.quarter_turns = k;
      return out;
    }
  }
  out.status = ForwardStatus::flagged;
  return out;
}

FixtureClassifier::FixtureClassifier(std::map<std::string, std::vector<bool>> answers)
    : answers_(std::move(answers)) {}

FixtureClassifier FixtureClassifier::from_json_text(std::string_view text) {
  std::map<std::string, std::vector<bool>> answers;
  try {
    const auto doc = json::parse(text);
    for (const auto& [id, v] : doc.items()) {
      auto flags = v.get<std::vector<bool>>();
      if (flags.size() != 4) fail(ErrorKind::BadConfig, "classifier fixture for '" + id + "' needs 4 answers");
      answers.emplace(id, std::move(flags));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::BadConfig, std::string("classifier fixture does not parse: ") + e.what());
  }
  return FixtureClassifier(std::move(answers));
}

bool FixtureClassifier::front_facing(const ForwardQuery& q) {
  auto it = answers_.find(q.asset_id);
  if (it == answers_.end()) fail(ErrorKind::ClassifierUnavailable, "no fixture answer for '" + q.asset_id + "'");
  return it->second.at(static_cast<std::size_t>(q.quarter_turns));
}

HttpClassifier::HttpClassifier(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {}

bool HttpClassifier::front_facing(const ForwardQuery& q) {
  const json body{{"asset_id", q.asset_id}, {"rotation_deg", 90 * q.quarter_turns}, {"image_path", q.image_path}};
  HttpResponse res;
  try {
    res = http_post_json(url_, body.dump(), {}, timeout_);
  } catch (const Error& e) {
    fail(ErrorKind::ClassifierUnavailable, e.what());
  }
  if (res.status < 200 || res.status >= 300) {
    fail(ErrorKind::ClassifierUnavailable, "classifier returned HTTP " + std::to_string(res.status));
  }
  try {
    return json::parse(res.body).at("front_facing").get<bool>();
  } catch (const json::exception& e) {
    fail(ErrorKind::ClassifierUnavailable, std::string("classifier reply lacks front_facing: ") + e.what());
  }
}

BudgetedClassifier::BudgetedClassifier(FrontClassifier& inner, long budget) : inner_(inner), budget_(budget) {}

bool BudgetedClassifier::front_facing(const ForwardQuery& q) {
  if (used_.fetch_add(1) >= budget_) {
    used_.fetch_sub(1);
    fail(ErrorKind::ClassifierUnavailable, "classifier request budget exhausted");
  }
  return inner_.front_facing(q);
}

}  // namespace bankaudit::metrics
