#include "bankaudit/report/serialize.hpp"

#include <cmath>
#include <limits>

#include "bankaudit/core/io.hpp"

namespace bankaudit::report {

using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double dbl(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}
json vec3(Vec3 v) { return json::array({num(v.x), num(v.y), num(v.z)}); }
Vec3 vec3_from(const json& j) { return {dbl(j.at(0)), dbl(j.at(1)), dbl(j.at(2))}; }

json opt(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }
std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

metrics::ForwardStatus parse_forward_status(std::string_view s) {
  for (auto f : {metrics::ForwardStatus::accepted, metrics::ForwardStatus::rotated, metrics::ForwardStatus::flagged})
    if (metrics::to_string(f) == s) return f;
  fail(ErrorKind::BadConfig, "unknown forward status '" + std::string(s) + "'");
}

json stats_json(const metrics::CategoryScaleStats& s) {
  return {{"n", s.n},
          {"mean", num(s.mean)},
          {"stddev", num(s.stddev)},
          {"cv", num(s.cv)},
          {"median", num(s.median)},
          {"min", num(s.min)},
          {"max", num(s.max)},
          {"trimmed_mean", num(s.trimmed_mean)},
          {"pct_plausible", num(s.pct_plausible)},
          {"mean_sps", num(s.mean_sps)},
          {"pct_perfect", num(s.pct_perfect)}};
}

json pair_json(const std::optional<PairSummary>& p) {
  if (!p) return nullptr;
  return {{"n", p->n}, {"mean", num(p->mean)}, {"std", num(p->stddev)}};
}

}  // namespace

json to_json(const AuditRecord& r) {
  json j;
  j["asset_id"] = r.asset_id;
  j["category"] = r.category;
  j["subcategory"] = r.subcategory;
  j["anchor_type"] = ingest::to_string(r.anchor_type);
  j["measurement"] = {{"axis", intervals::to_string(r.axis)}, {"x", num(r.x)}};
  j["bbox"] = {{"min", vec3(r.bbox_min)}, {"max", vec3(r.bbox_max)}};
  json scale = {{"has_interval", r.has_interval}, {"plausible", r.plausible}};
  if (r.has_interval) {
    scale["lower"] = num(r.lower);
    scale["upper"] = num(r.upper);
    for (std::size_t k = 0; k < 3; ++k) scale["sps"][std::string(metrics::to_string(metrics::kAllDecays[k]))] = num(r.sps[k]);
  }
  j["scale"] = scale;
  const auto& h = r.health;
  j["health"] = {{"watertight", h.watertight},
                 {"manifold", h.manifold},
                 {"degenerate_fraction", num(h.degenerate_fraction)},
                 {"face_count", h.face_count},
                 {"has_uv", h.has_uv},
                 {"boundary_edges", h.boundary_edges},
                 {"nonmanifold_edges", h.nonmanifold_edges},
                 {"degenerate_faces", h.degenerate_faces},
                 {"winding_consistent", h.winding_consistent}};
  const auto& a = r.anchor;
  j["anchor"] = {{"epsilon", num(a.epsilon_anchor)},
                 {"raw_epsilon", num(a.raw_epsilon)},
                 {"expected_anchor", vec3(a.expected_anchor)},
                 {"expected_type", ingest::to_string(a.expected_type)},
                 {"mode", metrics::to_string(a.mode)},
                 {"capped", a.capped},
                 {"out_of_box", a.out_of_box},
                 {"under_1cm", a.under_1cm},
                 {"volumetric_center", a.volumetric_center}};
  if (r.hull)
    j["hull"] = {{"hull_triangles", r.hull->hull_triangles},
                 {"vertex_containment", num(r.hull->vertex_containment)},
                 {"volume_coverage", num(r.hull->volume_coverage)},
                 {"hull_volume", num(r.hull->hull_volume)}};
  else
    j["hull"] = nullptr;
  if (!r.hull_error.empty()) j["hull_error"] = r.hull_error;
  json axes = json::object();
  for (std::size_t k = 0; k < 5; ++k) axes[std::string(text::kAxes[k])] = r.text.axes[k];
  j["text"] = {{"clip_tokens", r.text.clip_tokens},
               {"meaningful", r.text.meaningful},
               {"meaningful_tokens", r.meaningful_tokens},
               {"concept_density", r.text.density},
               {"axes", axes}};
  if (r.forward)
    j["forward_axis"] = {{"status", metrics::to_string(r.forward->status)},
                         {"rotated_by_deg", r.forward->rotated_by_deg()},
                         {"queries", r.forward->queries}};
  else
    j["forward_axis"] = nullptr;
  if (!r.forward_error.empty()) j["forward_error"] = r.forward_error;
  j["coherence"] = {{"text_ref", opt(r.coherence_text_ref)},
                    {"text_3d", opt(r.coherence_text_3d)},
                    {"ref_3d", opt(r.coherence_ref_3d)}};
  j["material"] = {{"texture_count", r.material.texture_count},
                   {"mean_texture_size", num(r.material.mean_texture_size)},
                   {"has_basecolor", r.material.has_basecolor},
                   {"has_normal", r.material.has_normal},
                   {"has_roughness", r.material.has_roughness}};
  j["gates"] = {{"geometric", to_string(r.gates.geometric)},
                {"scale", to_string(r.gates.scale)},
                {"forward_axis", to_string(r.gates.forward_axis)}};
  j["warnings"] = r.warnings;
  return j;
}

AuditRecord record_from_json(const json& j) {
  try {
    AuditRecord r;
    r.asset_id = j.at("asset_id").get<std::string>();
    r.category = j.at("category").get<std::string>();
    r.subcategory = j.at("subcategory").get<std::string>();
    r.anchor_type = ingest::parse_anchor_type(j.at("anchor_type").get<std::string>());
    r.axis = intervals::parse_measure_axis(j.at("measurement").at("axis").get<std::string>());
    r.x = dbl(j["measurement"].at("x"));
    r.bbox_min = vec3_from(j.at("bbox").at("min"));
    r.bbox_max = vec3_from(j["bbox"].at("max"));
    const auto& s = j.at("scale");
    r.has_interval = s.at("has_interval").get<bool>();
    r.plausible = s.at("plausible").get<bool>();
    if (r.has_interval) {
      r.lower = dbl(s.at("lower"));
      r.upper = dbl(s.at("upper"));
      for (std::size_t k = 0; k < 3; ++k) r.sps[k] = dbl(s.at("sps").at(std::string(metrics::to_string(metrics::kAllDecays[k]))));
    }
    const auto& h = j.at("health");
    r.health.watertight = h.at("watertight").get<bool>();
    r.health.manifold = h.at("manifold").get<bool>();
    r.health.degenerate_fraction = dbl(h.at("degenerate_fraction"));
    r.health.face_count = h.at("face_count").get<std::size_t>();
    r.health.has_uv = h.at("has_uv").get<bool>();
    r.health.boundary_edges = h.at("boundary_edges").get<std::size_t>();
    r.health.nonmanifold_edges = h.at("nonmanifold_edges").get<std::size_t>();
    r.health.degenerate_faces = h.at("degenerate_faces").get<std::size_t>();
    r.health.winding_consistent = h.at("winding_consistent").get<bool>();
    const auto& a = j.at("anchor");
    r.anchor.asset_id = r.asset_id;
    r.anchor.epsilon_anchor = dbl(a.at("epsilon"));
    r.anchor.raw_epsilon = dbl(a.at("raw_epsilon"));
    r.anchor.expected_anchor = vec3_from(a.at("expected_anchor"));
    r.anchor.expected_type = ingest::parse_anchor_type(a.at("expected_type").get<std::string>());
    r.anchor.mode = metrics::parse_anchor_mode(a.at("mode").get<std::string>());
    r.anchor.capped = a.at("capped").get<bool>();
    r.anchor.out_of_box = a.at("out_of_box").get<bool>();
    r.anchor.under_1cm = a.at("under_1cm").get<bool>();
    r.anchor.volumetric_center = a.at("volumetric_center").get<bool>();
    if (!j.at("hull").is_null()) {
      const auto& hj = j["hull"];
      geometry::HullReport hr;
      hr.hull_triangles = hj.at("hull_triangles").get<std::size_t>();
      hr.vertex_containment = dbl(hj.at("vertex_containment"));
      hr.volume_coverage = dbl(hj.at("volume_coverage"));
      hr.hull_volume = dbl(hj.at("hull_volume"));
      r.hull = hr;
    }
    r.hull_error = j.value("hull_error", "");
    const auto& t = j.at("text");
    r.text.clip_tokens = t.at("clip_tokens").get<std::size_t>();
    r.text.meaningful = t.at("meaningful").get<std::size_t>();
    r.meaningful_tokens = t.at("meaningful_tokens").get<std::vector<std::string>>();
    r.text.density = t.at("concept_density").get<int>();
    for (std::size_t k = 0; k < 5; ++k) r.text.axes[k] = t.at("axes").at(std::string(text::kAxes[k])).get<bool>();
    if (!j.at("forward_axis").is_null()) {
      const auto& f = j["forward_axis"];
      metrics::ForwardAxisResult fr;
      fr.status = parse_forward_status(f.at("status").get<std::string>());
      fr.quarter_turns = f.at("rotated_by_deg").get<int>() / 90;
      fr.queries = f.at("queries").get<int>();
      r.forward = fr;
    }
    r.forward_error = j.value("forward_error", "");
    const auto& c = j.at("coherence");
    r.coherence_text_ref = opt_from(c, "text_ref");
    r.coherence_text_3d = opt_from(c, "text_3d");
    r.coherence_ref_3d = opt_from(c, "ref_3d");
    const auto& m = j.at("material");
    r.material.texture_count = m.at("texture_count").get<std::size_t>();
    r.material.mean_texture_size = dbl(m.at("mean_texture_size"));
    r.material.has_basecolor = m.at("has_basecolor").get<bool>();
    r.material.has_normal = m.at("has_normal").get<bool>();
    r.material.has_roughness = m.at("has_roughness").get<bool>();
    const auto& g = j.at("gates");
    r.gates.geometric = parse_gate_outcome(g.at("geometric").get<std::string>());
    r.gates.scale = parse_gate_outcome(g.at("scale").get<std::string>());
    r.gates.forward_axis = parse_gate_outcome(g.at("forward_axis").get<std::string>());
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::BadConfig, std::string("audit record: ") + e.what());
  }
}

json to_json(const AssetFailure& f) {
  return {{"asset_id", f.asset_id}, {"kind", to_string(f.kind)}, {"message", f.message}};
}

AssetFailure failure_from_json(const json& j) {
  try {
    auto kind = parse_error_kind(j.at("kind").get<std::string>());
    if (!kind) fail(ErrorKind::BadConfig, "failure entry: unknown kind");
    return {j.at("asset_id").get<std::string>(), *kind, j.at("message").get<std::string>()};
  } catch (const json::exception& e) {
    fail(ErrorKind::BadConfig, std::string("failure entry: ") + e.what());
  }
}

json to_json(const Dashboard& d) {
  json j;
  j["counts"] = {{"assets", d.assets}, {"records", d.records}, {"failures", d.failures},
                 {"failures_by_kind", d.failures_by_kind}};
  json cats = json::array();
  for (const auto& c : d.categories)
    cats.push_back({{"category", c.category}, {"lower", num(c.lower)}, {"upper", num(c.upper)}, {"axis", c.axis},
                    {"stats", stats_json(c.stats)}});
  json scale = {{"scored", d.scored},
                {"mean_sps", num(d.mean_sps)},
                {"pct_plausible", num(d.pct_plausible)},
                {"mean_cv", num(d.mean_cv)},
                {"categories", cats},
                {"categories_without_interval", d.categories_without_interval}};
  if (d.sensitivity) {
    json s;
    for (const auto& m : d.sensitivity->per_category) {
      json row = {{"category", m.category}};
      for (std::size_t k = 0; k < 3; ++k) row[std::string(metrics::to_string(metrics::kAllDecays[k]))] = num(m.mean_sps[k]);
      s["per_category"].push_back(row);
    }
    for (const auto& t : d.sensitivity->kendall_tau)
      s["kendall_tau"].push_back(
          {{"a", metrics::to_string(t.a)}, {"b", metrics::to_string(t.b)}, {"tau", num(t.tau)}});
    scale["sensitivity"] = s;
  } else {
    scale["sensitivity"] = nullptr;
  }
  j["scale"] = scale;
  j["geometry"] = {{"pct_watertight", num(d.pct_watertight)},
                   {"pct_manifold", num(d.pct_manifold)},
                   {"pct_uv", num(d.pct_uv)},
                   {"mean_degenerate_fraction", num(d.mean_degenerate_fraction)},
                   {"mean_faces", num(d.mean_faces)},
                   {"median_faces", num(d.median_faces)}};
  j["anchor"] = {{"n", d.anchor.n},
                 {"mean", num(d.anchor.mean)},
                 {"median", num(d.anchor.median)},
                 {"pct_out_of_box", num(d.anchor.pct_out_of_box)},
                 {"pct_under_1cm", num(d.anchor.pct_under_1cm)},
                 {"capped", d.anchor.capped}};
  j["hull"] = {{"n", d.hulls},
               {"mean_vertex_containment", num(d.mean_hull_containment)},
               {"mean_volume_coverage", num(d.mean_hull_coverage)},
               {"median_hull_triangles", d.hull_triangles_median}};
  j["coherence"] = {{"text_ref", pair_json(d.coherence_text_ref)},
                    {"text_3d", pair_json(d.coherence_text_3d)},
                    {"ref_3d", pair_json(d.coherence_ref_3d)}};
  json cov = json::object();
  for (std::size_t k = 0; k < 5; ++k) cov[std::string(text::kAxes[k])] = num(d.axis_coverage[k]);
  j["text"] = {{"mean_clip_tokens", num(d.mean_clip_tokens)},
               {"mean_description_tokens", num(d.mean_description_tokens)},
               {"vocab_size", d.vocab_size},
               {"mean_concept_density", num(d.mean_concept_density)},
               {"axis_coverage", cov}};
  const char* names[3] = {"geometric", "scale", "forward_axis"};
  json gates = json::object();
  for (std::size_t k = 0; k < 3; ++k)
    gates[names[k]] = {{"evaluated", d.gate_evaluated[k]}, {"pass_rate", num(d.gate_pass_rate[k])}};
  gates["overall_pass_rate"] = num(d.overall_pass_rate);
  j["gates"] = gates;
  return j;
}

json to_json(const AuditConfig& c) {
  return {{"decay", metrics::to_string(c.decay)},
          {"trim", c.trim},
          {"axis", intervals::to_string(c.axis)},
          {"anchor_mode", metrics::to_string(c.anchor.mode)},
          {"anchor_cap_m", c.anchor.cap_m},
          {"robust_trim_pct", c.anchor.robust_trim_pct},
          {"out_of_box_slack", c.anchor.out_of_box_slack},
          {"gate_require_watertight", c.gates.require_watertight},
          {"gate_max_degenerate_fraction", c.gates.max_degenerate_fraction},
          {"gate_min_faces", c.gates.min_faces},
          {"gate_max_faces", c.gates.max_faces},
          {"allow_missing_intervals", c.allow_missing_intervals},
          {"coherence_bin_width", c.coherence_bin_width},
          {"forward_sequential", c.forward_sequential}};
}

AuditConfig config_from_json(const json& j) {
  try {
    AuditConfig c;
    c.decay = metrics::parse_decay(j.at("decay").get<std::string>());
    c.trim = j.at("trim").get<double>();
    c.axis = intervals::parse_measure_axis(j.at("axis").get<std::string>());
    c.anchor.mode = metrics::parse_anchor_mode(j.at("anchor_mode").get<std::string>());
    c.anchor.cap_m = j.at("anchor_cap_m").get<double>();
    c.anchor.robust_trim_pct = j.at("robust_trim_pct").get<double>();
    c.anchor.out_of_box_slack = j.at("out_of_box_slack").get<double>();
    c.gates.require_watertight = j.at("gate_require_watertight").get<bool>();
    c.gates.max_degenerate_fraction = j.at("gate_max_degenerate_fraction").get<double>();
    c.gates.min_faces = j.at("gate_min_faces").get<std::size_t>();
    c.gates.max_faces = j.at("gate_max_faces").get<std::size_t>();
    c.allow_missing_intervals = j.at("allow_missing_intervals").get<bool>();
    c.coherence_bin_width = j.at("coherence_bin_width").get<double>();
    c.forward_sequential = j.at("forward_sequential").get<bool>();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::BadConfig, std::string("config: ") + e.what());
  }
}

std::string config_fingerprint(const std::map<std::string, std::string>& hashes, const AuditConfig& cfg) {
  json j = {{"hashes", hashes}, {"config", to_json(cfg)}};
  return sha256_hex(j.dump());
}

json audit_document(const AuditResult& result, const AuditConfig& cfg, const ReportMeta& meta) {
  json doc;
  doc["tool"] = {{"name", meta.tool}, {"version", meta.version}};
  doc["generated_at"] = meta.generated_at;
  doc["inputs"] = meta.inputs;
  doc["hashes"] = meta.hashes;
  doc["fingerprint"] = meta.fingerprint;
  doc["config"] = to_json(cfg);
  doc["dashboard"] = to_json(result.dashboard);
  json recs = json::array();
  for (const auto& r : result.records) recs.push_back(to_json(r));
  doc["records"] = std::move(recs);
  json fails = json::array();
  for (const auto& f : result.failures) fails.push_back(to_json(f));
  doc["failures"] = std::move(fails);
  return doc;
}

AuditDocument parse_audit_document(const json& j) {
  AuditDocument d;
  try {
    d.meta.tool = j.at("tool").at("name").get<std::string>();
    d.meta.version = j.at("tool").at("version").get<std::string>();
    d.meta.generated_at = j.at("generated_at").get<std::int64_t>();
    d.meta.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
    d.meta.hashes = j.at("hashes").get<std::map<std::string, std::string>>();
    d.meta.fingerprint = j.at("fingerprint").get<std::string>();
    d.dashboard = j.at("dashboard");
    for (const auto& r : j.at("records")) d.records.push_back(record_from_json(r));
    for (const auto& f : j.at("failures")) d.failures.push_back(failure_from_json(f));
  } catch (const json::exception& e) {
    fail(ErrorKind::BadConfig, std::string("audit document: ") + e.what());
  }
  d.config = config_from_json(j.at("config"));
  return d;
}

std::string dump_document(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace bankaudit::report
