#include "bankaudit/report/audit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <thread>

#include "bankaudit/core/io.hpp"
#include "bankaudit/crossmodal/coherence.hpp"
#include "bankaudit/ingest/glb.hpp"
#include "bankaudit/ingest/gltf_mesh.hpp"

namespace bankaudit::report {

namespace fs = std::filesystem;
using intervals::PlausibleInterval;

std::string_view to_string(GateOutcome g) noexcept {
  switch (g) {
    case GateOutcome::pass: return "pass";
    case GateOutcome::fail: return "fail";
    case GateOutcome::skipped: return "skipped";
  }
  return "skipped";
}

GateOutcome parse_gate_outcome(std::string_view s) {
  for (auto g : {GateOutcome::pass, GateOutcome::fail, GateOutcome::skipped})
    if (to_string(g) == s) return g;
  fail(ErrorKind::BadConfig, "unknown gate outcome '" + std::string(s) + "'");
}

bool GateResults::all_pass() const {
  return geometric != GateOutcome::fail && scale != GateOutcome::fail && forward_axis != GateOutcome::fail;
}

namespace {

bool same_file(const fs::path& a, const fs::path& b) {
  std::error_code ec;
  auto ca = fs::weakly_canonical(a, ec);
  if (ec) return a.lexically_normal() == b.lexically_normal();
  auto cb = fs::weakly_canonical(b, ec);
  if (ec) return a.lexically_normal() == b.lexically_normal();
  return ca == cb;
}

ingest::ExtractedAsset extract_file(const fs::path& path, const ingest::ExtractOptions& opts) {
  auto bytes = read_file_bytes(path);
  return ingest::extract_geometry(ingest::parse_glb(bytes), opts);
}

template <class T>
double mean_of(const std::vector<T>& v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (const auto& x : v) s += static_cast<double>(x);
  return s / static_cast<double>(v.size());
}

double pct(std::size_t k, std::size_t n) { return n ? 100.0 * static_cast<double>(k) / static_cast<double>(n) : 0.0; }

std::optional<PairSummary> summarize(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  PairSummary p;
  p.n = v.size();
  p.mean = mean_of(v);
  double ss = 0;
  for (double c : v) ss += (c - p.mean) * (c - p.mean);
  p.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  return p;
}

std::size_t decay_index(metrics::DecayKind d) {
  return static_cast<std::size_t>(std::find(metrics::kAllDecays.begin(), metrics::kAllDecays.end(), d) -
                                  metrics::kAllDecays.begin());
}

AuditRecord audit_one(const ingest::ManifestEntry& e, const PlausibleInterval* iv, const AuditInputs& in,
                      const AuditConfig& cfg) {
  AuditRecord r;
  r.asset_id = e.asset_id;
  r.category = e.category;
  r.subcategory = e.subcategory;
  r.anchor_type = e.anchor_type;

  ingest::MaterialProbe material;
  geometry::MeshGeometry mesh = load_asset_mesh(e, &r.warnings, &material);
  r.material = {material.texture_count, material.mean_texture_size(), material.has_basecolor, material.has_normal,
                material.has_roughness};

  r.health = geometry::health(mesh);
  const auto box = geometry::bbox(mesh);
  r.bbox_min = box.min;
  r.bbox_max = box.max;
  r.axis = iv && iv->axis ? *iv->axis : cfg.axis;
  r.x = metrics::measure(box.extent(), r.axis);
  if (iv) {
    r.has_interval = true;
    r.lower = iv->lower;
    r.upper = iv->upper;
    for (std::size_t k = 0; k < metrics::kAllDecays.size(); ++k) r.sps[k] = metrics::sps(r.x, *iv, metrics::kAllDecays[k]);
    r.plausible = metrics::boundary_distance(r.x, *iv) == 0.0;
  }

  r.anchor = metrics::anchor_error(mesh, e.anchor_type, cfg.anchor, e.asset_id);

  try {
    if (auto hull = load_hull_mesh(e)) r.hull = geometry::hull_report(mesh, *hull);
  } catch (const Error& err) {
    r.hull_error = err.what();
  }

  if (in.text.tokenizer && in.text.stopwords && in.text.banks)
    r.text = text::analyze_text(e.description, *in.text.tokenizer, *in.text.stopwords, *in.text.banks,
                                &r.meaningful_tokens);
  return r;
}

void forward_one(AuditRecord& r, const ingest::ManifestEntry& e, metrics::FrontClassifier& c) {
  metrics::ForwardQuery q{e.asset_id, 0, nullptr, e.image_path.string()};
  try {
    r.forward = metrics::forward_axis_audit(q, c);
  } catch (const Error& err) {
    r.forward_error = err.what();
  }
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

geometry::MeshGeometry load_asset_mesh(const ingest::ManifestEntry& e, std::vector<std::string>* warnings,
                                       ingest::MaterialProbe* material) {
  ingest::ExtractOptions opts;
  if (e.hull && !e.hull->node.empty() && same_file(e.hull->file, e.glb_path)) opts.exclude_nodes.push_back(e.hull->node);
  auto asset = extract_file(e.glb_path, opts);
  if (warnings) *warnings = std::move(asset.warnings);
  if (material) *material = std::move(asset.material);
  return std::move(asset.mesh);
}

std::optional<geometry::MeshGeometry> load_hull_mesh(const ingest::ManifestEntry& e) {
  if (!e.hull) return std::nullopt;
  ingest::ExtractOptions opts;
  if (!e.hull->node.empty()) opts.only_node = e.hull->node;
  return extract_file(e.hull->file, opts).mesh;
}

GateResults curation_gates(const AuditRecord& r, const GateConfig& cfg, const PlausibleInterval* iv) {
  GateResults g;
  const bool closed = r.health.watertight || !cfg.require_watertight;
  const bool clean = r.health.degenerate_fraction <= cfg.max_degenerate_fraction;
  const bool band = r.health.face_count >= cfg.min_faces && r.health.face_count <= cfg.max_faces;
  g.geometric = closed && clean && band ? GateOutcome::pass : GateOutcome::fail;
  if (iv) g.scale = metrics::scale_gate(r.x, *iv) ? GateOutcome::pass : GateOutcome::fail;
  if (r.forward)
    g.forward_axis = r.forward->status == metrics::ForwardStatus::flagged ? GateOutcome::fail : GateOutcome::pass;
  return g;
}

AuditResult run_audit(const AuditInputs& in, const AuditConfig& cfg) {
  if (in.manifest.empty()) fail(ErrorKind::EmptyDataset, "manifest has no assets");
  if (!cfg.allow_missing_intervals) {
    for (const auto& e : in.manifest)
      if (!in.intervals.find(e.category)) fail(ErrorKind::MissingInterval, e.category);
  }

  const std::size_t n = in.manifest.size();
  std::vector<std::optional<AuditRecord>> slots(n);
  std::vector<std::optional<AssetFailure>> errors(n);
  auto guarded = [&](std::size_t i, auto&& body) {
    try {
      body();
    } catch (const Error& err) {
      errors[i] = AssetFailure{in.manifest[i].asset_id, err.kind(), err.what()};
      slots[i].reset();
    } catch (const std::exception& err) {
      errors[i] = AssetFailure{in.manifest[i].asset_id, ErrorKind::IoFailure, err.what()};
      slots[i].reset();
    }
  };

  parallel_for(n, cfg.jobs, [&](std::size_t i) {
    guarded(i, [&] {
      const auto& e = in.manifest[i];
      slots[i] = audit_one(e, in.intervals.find(e.category), in, cfg);
      if (in.classifier && !cfg.forward_sequential) forward_one(*slots[i], e, *in.classifier);
    });
  });
  if (in.classifier && cfg.forward_sequential) {
    for (std::size_t i = 0; i < n; ++i)
      if (slots[i]) forward_one(*slots[i], in.manifest[i], *in.classifier);
  }

  if (in.embeddings) {
    using crossmodal::CoherencePair;
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 0; i < n; ++i)
      if (slots[i]) by_id.emplace(slots[i]->asset_id, i);
    for (auto pair : {CoherencePair::text_ref, CoherencePair::text_3d, CoherencePair::ref_3d}) {
      try {
        auto stats = crossmodal::coherence_stats(*in.embeddings, pair, cfg.coherence_bin_width);
        for (const auto& [id, c] : stats.per_asset) {
          auto it = by_id.find(id);
          if (it == by_id.end()) continue;
          auto& r = *slots[it->second];
          (pair == CoherencePair::text_ref ? r.coherence_text_ref
           : pair == CoherencePair::text_3d ? r.coherence_text_3d
                                             : r.coherence_ref_3d) = c;
        }
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::NoOverlap) throw;
      }
    }
  }

  AuditResult out;
  for (std::size_t i = 0; i < n; ++i) {
    if (slots[i]) {
      slots[i]->gates = curation_gates(*slots[i], cfg.gates, in.intervals.find(slots[i]->category));
      out.records.push_back(std::move(*slots[i]));
    } else if (errors[i]) {
      out.failures.push_back(std::move(*errors[i]));
    }
  }
  out.dashboard = build_dashboard(out.records, out.failures, n, cfg);
  return out;
}

Dashboard build_dashboard(const std::vector<AuditRecord>& records, const std::vector<AssetFailure>& failures,
                          std::size_t manifest_size, const AuditConfig& cfg) {
  Dashboard d;
  d.assets = manifest_size;
  d.records = records.size();
  d.failures = failures.size();
  for (const auto& f : failures) ++d.failures_by_kind[std::string(to_string(f.kind))];
  const std::size_t di = decay_index(cfg.decay);

  std::map<std::string, std::vector<const AuditRecord*>> by_cat;
  std::set<std::string> unscored;
  std::vector<double> sps;
  std::size_t plausible = 0;
  for (const auto& r : records) {
    if (r.has_interval) {
      by_cat[r.category].push_back(&r);
      sps.push_back(r.sps[di]);
      plausible += r.plausible;
    } else {
      unscored.insert(r.category);
    }
  }
  d.scored = sps.size();
  d.mean_sps = mean_of(sps);
  d.pct_plausible = pct(plausible, sps.size());
  d.categories_without_interval.assign(unscored.begin(), unscored.end());

  std::vector<double> cvs;
  std::vector<metrics::DecayMeans> decay_means;
  for (const auto& [cat, rs] : by_cat) {
    std::vector<metrics::AssetMeasurement> ms;
    for (const auto* r : rs) ms.push_back({r->asset_id, r->x, r->axis});
    PlausibleInterval iv;
    iv.category = cat;
    iv.lower = rs.front()->lower;
    iv.upper = rs.front()->upper;
    CategoryRow row{cat, iv.lower, iv.upper, std::string(intervals::to_string(rs.front()->axis)),
                    metrics::category_stats(ms, iv, cfg.decay, cfg.trim)};
    if (row.stats.n >= 2 && std::isfinite(row.stats.cv)) cvs.push_back(row.stats.cv);
    d.categories.push_back(std::move(row));

    metrics::DecayMeans dm{cat, {}};
    for (std::size_t k = 0; k < 3; ++k) {
      double s = 0;
      for (const auto* r : rs) s += r->sps[k];
      dm.mean_sps[k] = s / static_cast<double>(rs.size());
    }
    decay_means.push_back(dm);
  }
  d.mean_cv = mean_of(cvs);
  if (decay_means.size() >= 2) d.sensitivity = metrics::sensitivity_report(decay_means);

  std::size_t wt = 0, mf = 0, uv = 0;
  std::vector<double> deg, faces;
  std::vector<metrics::AnchorReport> anchors;
  std::vector<double> containment, coverage;
  std::vector<std::size_t> hull_tris;
  std::vector<double> c_tr, c_t3, c_r3, clip, meaningful, density;
  std::set<std::string> vocab;
  std::array<std::size_t, 5> axis_hits{};
  std::array<std::size_t, 3> gate_pass{};
  std::size_t all_pass = 0;
  for (const auto& r : records) {
    wt += r.health.watertight;
    mf += r.health.manifold;
    uv += r.health.has_uv;
    deg.push_back(r.health.degenerate_fraction);
    faces.push_back(static_cast<double>(r.health.face_count));
    anchors.push_back(r.anchor);
    if (r.hull) {
      containment.push_back(r.hull->vertex_containment);
      if (std::isfinite(r.hull->volume_coverage)) coverage.push_back(r.hull->volume_coverage);
      hull_tris.push_back(r.hull->hull_triangles);
    }
    if (r.coherence_text_ref) c_tr.push_back(*r.coherence_text_ref);
    if (r.coherence_text_3d) c_t3.push_back(*r.coherence_text_3d);
    if (r.coherence_ref_3d) c_r3.push_back(*r.coherence_ref_3d);
    clip.push_back(static_cast<double>(r.text.clip_tokens));
    meaningful.push_back(static_cast<double>(r.text.meaningful));
    density.push_back(r.text.density);
    vocab.insert(r.meaningful_tokens.begin(), r.meaningful_tokens.end());
    for (std::size_t k = 0; k < 5; ++k) axis_hits[k] += r.text.axes[k];
    const std::array<GateOutcome, 3> gs{r.gates.geometric, r.gates.scale, r.gates.forward_axis};
    for (std::size_t k = 0; k < 3; ++k) {
      if (gs[k] == GateOutcome::skipped) continue;
      ++d.gate_evaluated[k];
      gate_pass[k] += gs[k] == GateOutcome::pass;
    }
    all_pass += r.gates.all_pass();
  }
  const std::size_t n = records.size();
  d.pct_watertight = pct(wt, n);
  d.pct_manifold = pct(mf, n);
  d.pct_uv = pct(uv, n);
  d.mean_degenerate_fraction = mean_of(deg);
  d.mean_faces = mean_of(faces);
  if (!faces.empty()) {
    std::sort(faces.begin(), faces.end());
    d.median_faces = n % 2 ? faces[n / 2] : (faces[n / 2 - 1] + faces[n / 2]) / 2.0;
    d.anchor = metrics::aggregate_anchors(anchors);
  }
  d.hulls = containment.size();
  d.mean_hull_containment = mean_of(containment);
  d.mean_hull_coverage = mean_of(coverage);
  if (!hull_tris.empty()) {
    std::sort(hull_tris.begin(), hull_tris.end());
    d.hull_triangles_median = hull_tris[(hull_tris.size() - 1) / 2];
  }
  d.coherence_text_ref = summarize(c_tr);
  d.coherence_text_3d = summarize(c_t3);
  d.coherence_ref_3d = summarize(c_r3);
  d.mean_clip_tokens = mean_of(clip);
  d.mean_description_tokens = mean_of(meaningful);
  d.vocab_size = vocab.size();
  d.mean_concept_density = mean_of(density);
  for (std::size_t k = 0; k < 5; ++k) d.axis_coverage[k] = n ? static_cast<double>(axis_hits[k]) / static_cast<double>(n) : 0.0;
  for (std::size_t k = 0; k < 3; ++k) d.gate_pass_rate[k] = pct(gate_pass[k], d.gate_evaluated[k]);
  d.overall_pass_rate = pct(all_pass, n);
  return d;
}

}  // namespace bankaudit::report
