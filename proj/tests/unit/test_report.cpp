#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <unistd.h>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/io.hpp"
#include "bankaudit/report/audit.hpp"
#include "bankaudit/report/render.hpp"
#include "bankaudit/report/serialize.hpp"
#include "support/bank_oracle.hpp"
#include "support/glb_builder.hpp"
#include "support/meshes.hpp"
#include "support/synthetic_bank.hpp"

using namespace bankaudit;
using namespace bankaudit::report;
namespace fs = std::filesystem;
using nlohmann::json;
using testing::box;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::IoFailure;
}

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("bankaudit_report_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

struct Text {
  text::TokenizerModel tok = text::TokenizerModel::load(text::TokenizerModel::default_dir());
  text::Stopwords stop = text::Stopwords::load(text::Stopwords::default_path());
  text::KeywordBanks banks = text::KeywordBanks::load(text::KeywordBanks::default_path());
  TextResources res() const { return {&tok, &stop, &banks}; }
};

const Text& shared_text() {
  static const Text t;
  return t;
}

AuditConfig synth_config() {
  AuditConfig c;
  c.gates.min_faces = 10;
  c.gates.max_faces = 1000;
  return c;
}

AuditInputs load_bank(const fs::path& dir) {
  AuditInputs in;
  in.manifest = ingest::parse_manifest(read_file_text(dir / "manifest.jsonl"), dir / "assets");
  in.intervals = intervals::load_interval_file(dir / "intervals.json");
  in.text = shared_text().res();
  return in;
}

// Three closed cubes on the origin with heights 0.5, 0.75, 1.25 m.
fs::path three_cubes(const std::string& name) {
  testing::SynthBank b;
  b.categories = {{"seating", 0.6, 1.1}};
  for (int i = 0; i < 3; ++i) {
    testing::SynthAsset s;
    s.id = "cube_" + std::to_string(i);
    s.category = "seating";
    const double h[] = {0.5, 0.75, 1.25};
    s.size = {0.5, 0.5, h[i]};
    s.description = "a red oak chair with a tall back";
    b.assets.push_back(s);
  }
  auto dir = scratch(name);
  testing::write_synthetic_bank(b, dir);
  return dir;
}

ReportMeta fixed_meta() {
  ReportMeta m;
  m.generated_at = 1700000000;
  m.fingerprint = "test";
  return m;
}

}  // namespace

TEST_CASE("three cubes against hand-computed aggregates") {
  auto dir = three_cubes("three");
  auto res = run_audit(load_bank(dir), AuditConfig{});
  REQUIRE(res.records.size() == 3);
  CHECK(res.failures.empty());
  const auto& d = res.dashboard;
  // Interval [0.6, 1.1], half width 0.25: 0.5 is 0.1 short, 1.25 is 0.15 over.
  const double s0 = std::exp(-0.16), s2 = std::exp(-0.36);
  CHECK(d.mean_sps == doctest::Approx((s0 + 1.0 + s2) / 3).epsilon(1e-12));
  CHECK(d.pct_plausible == doctest::Approx(100.0 / 3));
  const double mean = 2.5 / 3;
  const double sd = std::sqrt(((0.5 - mean) * (0.5 - mean) + (0.75 - mean) * (0.75 - mean) +
                               (1.25 - mean) * (1.25 - mean)) / 3);
  CHECK(d.mean_cv == doctest::Approx(sd / mean).epsilon(1e-12));
  REQUIRE(d.categories.size() == 1);
  CHECK(d.categories[0].stats.median == 0.75);
  CHECK(d.categories[0].stats.min == 0.5);
  CHECK(d.categories[0].stats.max == 1.25);
  CHECK(d.pct_watertight == 100.0);
  CHECK(d.anchor.mean == 0.0);
  CHECK(d.anchor.pct_under_1cm == 100.0);
  // 12 faces each, under the default 100-face floor.
  CHECK(d.gate_evaluated[0] == 3);
  CHECK(d.gate_pass_rate[0] == 0.0);
  CHECK(d.gate_pass_rate[1] == 100.0);
  CHECK(d.gate_evaluated[2] == 0);
  CHECK(d.overall_pass_rate == 0.0);
  CHECK(res.records[0].gates.forward_axis == GateOutcome::skipped);
  CHECK(d.vocab_size > 0);
}

TEST_CASE("empty manifest") {
  AuditInputs in;
  CHECK(kind_of([&] { run_audit(in, {}); }) == ErrorKind::EmptyDataset);
}

TEST_CASE("one unreadable asset among three") {
  auto dir = three_cubes("partial");
  write_file_text(dir / "assets" / "cube_1.glb", "plainly not a binary glTF file");
  auto res = run_audit(load_bank(dir), AuditConfig{});
  REQUIRE(res.records.size() == 2);
  REQUIRE(res.failures.size() == 1);
  CHECK(res.failures[0].asset_id == "cube_1");
  CHECK(res.failures[0].kind == ErrorKind::BadMagic);
  CHECK(res.dashboard.assets == 3);
  CHECK(res.dashboard.records == 2);
  CHECK(res.dashboard.failures_by_kind.at("BadMagic") == 1);
  const double s0 = std::exp(-0.16), s2 = std::exp(-0.36);
  CHECK(res.dashboard.mean_sps == doctest::Approx((s0 + s2) / 2).epsilon(1e-12));

  fs::remove(dir / "assets" / "cube_2.glb");
  res = run_audit(load_bank(dir), AuditConfig{});
  CHECK(res.records.size() == 1);
  CHECK(res.failures[1].kind == ErrorKind::IoFailure);
}

TEST_CASE("missing intervals") {
  auto dir = three_cubes("missing");
  auto in = load_bank(dir);
  in.intervals.entries.clear();
  CHECK(kind_of([&] { run_audit(in, {}); }) == ErrorKind::MissingInterval);
  AuditConfig cfg;
  cfg.allow_missing_intervals = true;
  auto res = run_audit(in, cfg);
  CHECK(res.records.size() == 3);
  CHECK(res.dashboard.scored == 0);
  CHECK(res.dashboard.categories_without_interval == std::vector<std::string>{"seating"});
  for (const auto& r : res.records) {
    CHECK_FALSE(r.has_interval);
    CHECK(r.gates.scale == GateOutcome::skipped);
  }
}

TEST_CASE("curation gates") {
  AuditRecord r;
  r.health.watertight = true;
  r.health.face_count = 5000;
  r.x = 0.8;
  auto iv = intervals::manual_interval("seating", 0.6, 1.1);
  GateConfig cfg;
  r.forward = metrics::ForwardAxisResult{metrics::ForwardStatus::accepted, 0, 1};
  auto g = curation_gates(r, cfg, &iv);
  CHECK(g.geometric == GateOutcome::pass);
  CHECK(g.scale == GateOutcome::pass);
  CHECK(g.forward_axis == GateOutcome::pass);
  CHECK(g.all_pass());

  SUBCASE("placeholder primitive") {
    r.health.face_count = 2;
    cfg.min_faces = 1000;
    CHECK(curation_gates(r, cfg, &iv).geometric == GateOutcome::fail);
  }
  SUBCASE("open mesh unless relaxed") {
    r.health.watertight = false;
    CHECK(curation_gates(r, cfg, &iv).geometric == GateOutcome::fail);
    cfg.require_watertight = false;
    CHECK(curation_gates(r, cfg, &iv).geometric == GateOutcome::pass);
  }
  SUBCASE("degenerate threshold is inclusive") {
    r.health.degenerate_fraction = 0.01;
    CHECK(curation_gates(r, cfg, &iv).geometric == GateOutcome::pass);
    r.health.degenerate_fraction = 0.0101;
    CHECK(curation_gates(r, cfg, &iv).geometric == GateOutcome::fail);
  }
  SUBCASE("scale envelope") {
    r.x = 0.2;
    CHECK(curation_gates(r, cfg, &iv).scale == GateOutcome::pass);
    r.x = 0.19;
    CHECK(curation_gates(r, cfg, &iv).scale == GateOutcome::fail);
    r.x = 3.3;
    CHECK(curation_gates(r, cfg, &iv).scale == GateOutcome::pass);
    r.x = 3.31;
    CHECK(curation_gates(r, cfg, &iv).scale == GateOutcome::fail);
    CHECK(curation_gates(r, cfg, nullptr).scale == GateOutcome::skipped);
  }
  SUBCASE("forward outcomes") {
    r.forward->status = metrics::ForwardStatus::rotated;
    CHECK(curation_gates(r, cfg, &iv).forward_axis == GateOutcome::pass);
    r.forward->status = metrics::ForwardStatus::flagged;
    auto f = curation_gates(r, cfg, &iv);
    CHECK(f.forward_axis == GateOutcome::fail);
    CHECK_FALSE(f.all_pass());
    r.forward.reset();
    CHECK(curation_gates(r, cfg, &iv).forward_axis == GateOutcome::skipped);
  }
}

TEST_CASE("synthetic bank matches the construction oracle") {
  auto bank = testing::make_synthetic_bank(50, 7);
  auto dir = scratch("synth");
  testing::write_synthetic_bank(bank, dir);
  const auto cfg = synth_config();
  auto res = run_audit(load_bank(dir), cfg);
  REQUIRE(res.failures.empty());
  REQUIRE(res.records.size() == 50);
  const auto o = testing::oracle_aggregates(bank);
  const auto& d = res.dashboard;
  using testing::rel_close;
  CHECK(rel_close(d.mean_sps, o.mean_sps));
  CHECK(rel_close(d.pct_plausible, o.pct_plausible));
  CHECK(rel_close(d.mean_cv, o.mean_cv));
  REQUIRE(d.categories.size() == o.categories.size());
  for (const auto& c : d.categories) {
    const auto& oc = o.categories.at(c.category);
    CHECK(c.stats.n == oc.n);
    CHECK(rel_close(c.stats.trimmed_mean, oc.trimmed_mean));
    CHECK(rel_close(c.stats.median, oc.median));
    CHECK(rel_close(c.stats.cv, oc.cv));
    CHECK(rel_close(c.stats.mean_sps, oc.mean_sps));
    CHECK(rel_close(c.stats.pct_plausible, oc.pct_plausible));
  }
  CHECK(rel_close(d.pct_watertight, o.pct_watertight));
  CHECK(rel_close(d.anchor.mean, o.anchor_mean));
  CHECK(rel_close(d.anchor.median, o.anchor_median));
  CHECK(rel_close(d.anchor.pct_out_of_box, o.pct_out_of_box));
  CHECK(rel_close(d.anchor.pct_under_1cm, o.pct_under_1cm));
  CHECK(d.anchor.capped == o.anchor_capped);
  CHECK(d.hulls == o.hulls);
  CHECK(rel_close(d.mean_hull_containment, o.hull_containment));
  CHECK(rel_close(d.mean_hull_coverage, o.hull_coverage));
  CHECK(rel_close(d.gate_pass_rate[0], o.gate_geometric));
  CHECK(rel_close(d.gate_pass_rate[1], o.gate_scale));
  CHECK(rel_close(d.overall_pass_rate, o.gate_overall));

  // The bank exercises every branch it was built for.
  CHECK(d.anchor.capped > 0);
  CHECK(d.anchor.pct_out_of_box > 0);
  CHECK(d.anchor.pct_under_1cm > 0);
  CHECK(d.pct_watertight < 100);
  CHECK(o.gate_scale < 100);
  CHECK(o.hull_containment < 100);
}

TEST_CASE("embedded hull node is excluded from the body") {
  auto dir = scratch("embedded");
  testing::SynthBank b;
  b.categories = {{"table", 0.5, 0.9}};
  testing::SynthAsset s{"t0", "table", testing::Shape::box, {}, {1.0, 0.5, 0.75}, testing::HullKind::embedded, ""};
  b.assets.push_back(s);
  testing::write_synthetic_bank(b, dir);
  auto res = run_audit(load_bank(dir), AuditConfig{});
  REQUIRE(res.records.size() == 1);
  const auto& r = res.records[0];
  CHECK(r.health.face_count == 12);
  REQUIRE(r.hull.has_value());
  CHECK(r.hull->hull_triangles == 12);
  CHECK(r.hull->vertex_containment == 100.0);
  CHECK(r.hull->volume_coverage == doctest::Approx(1.0));
}

TEST_CASE("dashboard recomputed from emitted records") {
  auto bank = testing::make_synthetic_bank(30, 11);
  auto dir = scratch("recompute");
  testing::write_synthetic_bank(bank, dir);
  const auto cfg = synth_config();
  auto res = run_audit(load_bank(dir), cfg);
  const auto doc_json = json::parse(dump_document(audit_document(res, cfg, fixed_meta())));
  const auto doc = parse_audit_document(doc_json);
  const auto again = build_dashboard(doc.records, doc.failures, res.dashboard.assets, doc.config);
  CHECK(to_json(again) == doc_json.at("dashboard"));
}

TEST_CASE("structured round trip") {
  auto bank = testing::make_synthetic_bank(20, 3);
  auto dir = scratch("roundtrip");
  testing::write_synthetic_bank(bank, dir);
  write_file_text(dir / "assets" / "syn_004.glb", "broken");
  auto cfg = synth_config();
  cfg.decay = metrics::DecayKind::lorentzian;
  cfg.trim = 0.1;
  cfg.anchor.mode = metrics::AnchorMode::nearest_canonical;
  auto res = run_audit(load_bank(dir), cfg);
  REQUIRE(res.failures.size() == 1);
  res.records[0].coherence_text_3d = 0.25;
  res.records[1].forward = metrics::ForwardAxisResult{metrics::ForwardStatus::rotated, 3, 4};
  res.records[2].forward_error = "ClassifierUnavailable: budget";

  const auto text = dump_document(audit_document(res, cfg, fixed_meta()));
  const auto doc = parse_audit_document(json::parse(text));
  REQUIRE(doc.records.size() == res.records.size());
  for (std::size_t i = 0; i < res.records.size(); ++i) CHECK(to_json(doc.records[i]) == to_json(res.records[i]));
  CHECK(doc.records[1].forward->quarter_turns == 3);
  CHECK(*doc.records[0].coherence_text_3d == 0.25);
  CHECK(doc.failures == res.failures);
  CHECK(to_json(doc.config) == to_json(cfg));
  CHECK(doc.meta.generated_at == 1700000000);
  CHECK(dump_document(audit_document({doc.records, doc.failures, res.dashboard}, doc.config, doc.meta)) == text);

  SUBCASE("NaN survives as null") {
    AuditRecord r = res.records[0];
    r.hull = geometry::HullReport{12, 100.0, std::nan(""), 1.0};
    auto j = to_json(r);
    CHECK(j["hull"]["volume_coverage"].is_null());
    CHECK(std::isnan(record_from_json(j).hull->volume_coverage));
  }
  SUBCASE("malformed documents") {
    auto j = json::parse(text);
    j["records"][0].erase("gates");
    CHECK(kind_of([&] { parse_audit_document(j); }) == ErrorKind::BadConfig);
    j = json::parse(text);
    j["failures"][0]["kind"] = "Nope";
    CHECK(kind_of([&] { parse_audit_document(j); }) == ErrorKind::BadConfig);
  }
}

TEST_CASE("thread count does not change the report") {
  auto bank = testing::make_synthetic_bank(40, 5);
  auto dir = scratch("jobs");
  testing::write_synthetic_bank(bank, dir);
  auto cfg = synth_config();
  const auto one = dump_document(audit_document(run_audit(load_bank(dir), cfg), cfg, fixed_meta()));
  cfg.jobs = 6;
  auto res = run_audit(load_bank(dir), cfg);
  cfg.jobs = 1;
  CHECK(dump_document(audit_document(res, cfg, fixed_meta())) == one);
}

TEST_CASE("forward classifier through the audit") {
  auto dir = three_cubes("forward");
  auto in = load_bank(dir);
  auto fixture = metrics::FixtureClassifier::from_json_text(
      R"({"cube_0": [true, false, false, false], "cube_1": [false, false, true, false]})");
  in.classifier = &fixture;
  auto res = run_audit(in, AuditConfig{});
  CHECK(res.records[0].gates.forward_axis == GateOutcome::pass);
  CHECK(res.records[1].forward->rotated_by_deg() == 180);
  CHECK(res.records[1].gates.forward_axis == GateOutcome::pass);
  CHECK(res.records[2].gates.forward_axis == GateOutcome::skipped);
  CHECK_FALSE(res.records[2].forward_error.empty());
  CHECK(res.dashboard.gate_evaluated[2] == 2);

  SUBCASE("shared budget spent in manifest order") {
    metrics::BudgetedClassifier budget(fixture, 4);
    in.classifier = &budget;
    AuditConfig cfg;
    cfg.jobs = 4;
    cfg.forward_sequential = true;
    res = run_audit(in, cfg);
    CHECK(res.records[0].forward->queries == 1);
    CHECK(res.records[1].forward->status == metrics::ForwardStatus::rotated);
    CHECK_FALSE(res.records[2].forward.has_value());
  }
}

TEST_CASE("coherence joins records by id") {
  auto dir = three_cubes("coherence");
  auto in = load_bank(dir);
  crossmodal::RawTable raw{2, {}};
  using crossmodal::Modality;
  raw.rows.push_back({"cube_0", Modality::text, {1, 0}});
  raw.rows.push_back({"cube_0", Modality::ref_image, {0, 1}});
  raw.rows.push_back({"cube_1", Modality::text, {1, 0}});
  raw.rows.push_back({"cube_1", Modality::ref_image, {1, 0}});
  raw.rows.push_back({"ghost", Modality::text, {1, 0}});
  raw.rows.push_back({"ghost", Modality::ref_image, {1, 0}});
  auto table = crossmodal::EmbeddingTable::from_raw(raw);
  in.embeddings = &table;
  auto res = run_audit(in, AuditConfig{});
  CHECK(*res.records[0].coherence_text_ref == doctest::Approx(0.0));
  CHECK(*res.records[1].coherence_text_ref == doctest::Approx(1.0));
  CHECK_FALSE(res.records[2].coherence_text_ref.has_value());
  CHECK_FALSE(res.records[0].coherence_text_3d.has_value());
  REQUIRE(res.dashboard.coherence_text_ref.has_value());
  CHECK(res.dashboard.coherence_text_ref->n == 2);
  CHECK(res.dashboard.coherence_text_ref->mean == doctest::Approx(0.5));
  CHECK(res.dashboard.coherence_text_ref->stddev == doctest::Approx(0.5));
  CHECK_FALSE(res.dashboard.coherence_text_3d.has_value());
}

TEST_CASE("rendered reports") {
  auto dir = three_cubes("render");
  AuditConfig cfg;
  cfg.decay = metrics::DecayKind::linear;
  cfg.trim = 0.1;
  auto res = run_audit(load_bank(dir), cfg);
  auto out = dir / "report";
  write_report_dir(out, audit_document(res, cfg, fixed_meta()));
  for (const char* f : {"audit.json", "summary.txt", "categories.csv", "categories.md", "hist_heights.csv",
                        "hist_faces.csv", "hist_coherence.csv"})
    CHECK(fs::exists(out / f));

  const auto doc = read_report_dir(out);
  const auto prose = render_prose(doc);
  CHECK(prose.find("decay linear") != std::string::npos);
  CHECK(prose.find("trim 0.10") != std::string::npos);
  for (const char* row : {"Mean SPS", "Intra-category CV", "% Watertight", "% Manifold", "Mean anchor error (m)",
                          "CLIP Text<->3D", "Mean description tokens"})
    CHECK(prose.find(row) != std::string::npos);

  const auto csv = render_category_csv(doc);
  CHECK(csv.find("category,axis,lower_m,upper_m,n,median_m,mean_m,trimmed_mean_m,min_m,max_m") !=
        std::string::npos);
  CHECK(csv.find("seating,z,0.6000,1.1000,3,0.7500,0.8333,0.8333,0.5000,1.2500,") != std::string::npos);
  CHECK(csv.find(",33.3,") != std::string::npos);
  CHECK(render_category_markdown(doc).find("| seating | [0.60, 1.10] | 3 | 0.75 |") != std::string::npos);

  CHECK(parse_report_format("tabular") == ReportFormat::tabular);
  CHECK(kind_of([] { parse_report_format("pdf"); }) == ErrorKind::BadConfig);
  CHECK(kind_of([&] { read_report_dir(dir / "nowhere"); }) == ErrorKind::IoFailure);
}

TEST_CASE("histograms") {
  std::vector<AuditRecord> rs(5);
  const double xs[] = {1.0, 0.72, 0.75, 10.0, 0.0};
  const std::size_t faces[] = {0, 1, 2, 3, 1024};
  for (int i = 0; i < 5; ++i) {
    rs[i].category = i < 3 ? "seating" : "vehicle";
    rs[i].x = xs[i];
    rs[i].health.face_count = faces[i];
  }
  rs[0].coherence_text_3d = -1.0;
  rs[1].coherence_text_3d = 1.0;
  rs[2].coherence_text_3d = 0.0;

  auto h = height_histogram(rs);
  REQUIRE(h.size() == 3);  // 0.72 and 0.75 share [10^-0.2, 10^-0.1); zero heights drop
  CHECK(h[0].group == "seating");
  CHECK(h[0].count == 2);
  CHECK(h[0].lo == doctest::Approx(std::pow(10.0, -0.2)));
  CHECK(h[1].lo == 1.0);
  CHECK(h[2].group == "vehicle");
  CHECK(h[2].lo == 10.0);
  for (const auto& b : h) CHECK(b.hi == doctest::Approx(b.lo * std::pow(10.0, 0.1)));

  auto f = face_histogram(rs);
  REQUIRE(f.size() == 4);
  CHECK(f[0].lo == 0.0);
  CHECK(f[1].lo == 1.0);
  CHECK(f[2].lo == 2.0);
  CHECK(f[2].count == 2);  // 2 and 3
  CHECK(f[3].lo == 1024.0);
  CHECK(f[3].hi == 2048.0);

  auto c = coherence_histogram(rs, 0.5);
  REQUIRE(c.size() == 4);
  CHECK(c[0].count == 1);
  CHECK(c[2].count == 1);
  CHECK(c[3].count == 1);
  CHECK(c[3].hi == 1.0);
  CHECK(coherence_histogram(rs, 0.01).size() == 200);
  CHECK(kind_of([&] { coherence_histogram(rs, 0.3); }) == ErrorKind::InvalidArgument);
  CHECK(histogram_csv(c).rfind("group,lo,hi,count\ntext_3d,-1,-0.5,1\n", 0) == 0);
}

TEST_CASE("fingerprint tracks inputs and flags") {
  std::map<std::string, std::string> h{{"intervals", "aa"}, {"banks", "bb"}};
  AuditConfig c;
  const auto base = config_fingerprint(h, c);
  CHECK(base.size() == 64);
  CHECK(config_fingerprint(h, c) == base);
  c.trim = 0.1;
  CHECK(config_fingerprint(h, c) != base);
  c.trim = 0.05;
  h["banks"] = "bc";
  CHECK(config_fingerprint(h, c) != base);
  // Thread count is not part of the configuration echo.
  h["banks"] = "bb";
  c.jobs = 8;
  CHECK(config_fingerprint(h, c) == base);
}
