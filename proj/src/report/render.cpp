#include "bankaudit/report/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "bankaudit/core/io.hpp"
#include "bankaudit/crossmodal/coherence.hpp"

namespace bankaudit::report {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ReportFormat f) noexcept {
  switch (f) {
    case ReportFormat::structured: return "structured";
    case ReportFormat::tabular: return "tabular";
    case ReportFormat::prose: return "prose";
  }
  return "structured";
}

ReportFormat parse_report_format(std::string_view s) {
  for (auto f : {ReportFormat::structured, ReportFormat::tabular, ReportFormat::prose})
    if (to_string(f) == s) return f;
  fail(ErrorKind::BadConfig, "unknown report format '" + std::string(s) + "'");
}

namespace {

// Fixed-point formatting; json null and NaN print as "n/a".
std::string fmt(double v, int prec = 3) {
  if (!std::isfinite(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string fmt(const json& j, int prec = 3) {
  if (j.is_null()) return "n/a";
  return fmt(j.get<double>(), prec);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_field(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

std::string header_line(const AuditDocument& doc, const char* comment) {
  return std::string(comment) + " " + doc.meta.tool + " " + doc.meta.version + " fingerprint " + doc.meta.fingerprint +
         "\n";
}

struct Row {
  std::string category, axis;
  json lower, upper, n, median, mean, trimmed, min, max, stddev, cv, plausible, sps;
};

std::vector<Row> category_rows(const AuditDocument& doc) {
  std::vector<Row> rows;
  for (const auto& c : doc.dashboard.at("scale").at("categories")) {
    const auto& s = c.at("stats");
    rows.push_back({c.at("category").get<std::string>(), c.at("axis").get<std::string>(), c.at("lower"),
                    c.at("upper"), s.at("n"), s.at("median"), s.at("mean"), s.at("trimmed_mean"), s.at("min"),
                    s.at("max"), s.at("stddev"), s.at("cv"), s.at("pct_plausible"), s.at("mean_sps")});
  }
  return rows;
}

}  // namespace

std::string render_prose(const AuditDocument& doc) {
  const auto& d = doc.dashboard;
  std::ostringstream o;
  o << header_line(doc, "#");
  o << "Asset bank audit\n\n";
  const auto& counts = d.at("counts");
  o << "Assets: " << counts.at("assets").get<std::size_t>() << " in manifest, "
    << counts.at("records").get<std::size_t>() << " audited, " << counts.at("failures").get<std::size_t>()
    << " failed\n";
  for (const auto& [kind, k] : counts.at("failures_by_kind").items())
    o << "  " << kind << ": " << k.get<std::size_t>() << "\n";
  o << "Settings: decay " << metrics::to_string(doc.config.decay) << ", trim " << fmt(doc.config.trim, 2) << ", axis "
    << intervals::to_string(doc.config.axis) << ", anchor mode " << metrics::to_string(doc.config.anchor.mode)
    << " (cap " << fmt(doc.config.anchor.cap_m, 1) << " m)\n\n";

  const auto& coh = d.at("coherence").at("text_3d");
  struct Line {
    const char* name;
    std::string value;
  };
  std::vector<Line> lines{
      {"Mean SPS", fmt(d.at("scale").at("mean_sps"))},
      {"Intra-category CV", fmt(d.at("scale").at("mean_cv"), 2)},
      {"% Watertight", fmt(d.at("geometry").at("pct_watertight"), 1)},
      {"% Manifold", fmt(d.at("geometry").at("pct_manifold"), 1)},
      {"Mean anchor error (m)", fmt(d.at("anchor").at("mean"))},
      {"CLIP Text<->3D", coh.is_null() ? std::string("n/a") : fmt(coh.at("mean"))},
      {"Mean description tokens", fmt(d.at("text").at("mean_description_tokens"), 1)},
  };
  std::size_t w = 0;
  for (const auto& l : lines) w = std::max(w, std::string(l.name).size());
  o << "Dashboard\n";
  for (const auto& l : lines) o << "  " << l.name << std::string(w + 2 - std::string(l.name).size(), ' ') << l.value << "\n";

  o << "\nScale: " << d.at("scale").at("scored").get<std::size_t>() << " scored, "
    << fmt(d.at("scale").at("pct_plausible"), 1) << "% inside their interval\n";
  const auto& missing = d.at("scale").at("categories_without_interval");
  if (!missing.empty()) {
    o << "  without interval:";
    for (const auto& c : missing) o << " " << c.get<std::string>();
    o << "\n";
  }
  if (!d.at("scale").at("sensitivity").is_null())
    for (const auto& t : d.at("scale").at("sensitivity").at("kendall_tau"))
      o << "  Kendall tau " << t.at("a").get<std::string>() << "/" << t.at("b").get<std::string>() << ": "
        << fmt(t.at("tau"), 2) << "\n";
  const auto& g = d.at("geometry");
  o << "Geometry: mean faces " << fmt(g.at("mean_faces"), 1) << ", median " << fmt(g.at("median_faces"), 1) << ", "
    << fmt(g.at("pct_uv"), 1) << "% with UVs, mean degenerate fraction " << fmt(g.at("mean_degenerate_fraction"), 4)
    << "\n";
  const auto& a = d.at("anchor");
  o << "Anchor: median " << fmt(a.at("median")) << " m, " << fmt(a.at("pct_out_of_box"), 1) << "% out of box, "
    << fmt(a.at("pct_under_1cm"), 1) << "% under 1 cm, " << a.at("capped").get<std::size_t>() << " capped\n";
  const auto& h = d.at("hull");
  if (h.at("n").get<std::size_t>() > 0)
    o << "Hulls: " << h.at("n").get<std::size_t>() << ", median triangles "
      << h.at("median_hull_triangles").get<std::size_t>() << ", containment "
      << fmt(h.at("mean_vertex_containment"), 1) << "%, coverage " << fmt(h.at("mean_volume_coverage")) << "\n";
  for (const char* pair : {"text_ref", "text_3d", "ref_3d"}) {
    const auto& p = d.at("coherence").at(pair);
    if (p.is_null()) continue;
    o << "Coherence " << pair << ": " << fmt(p.at("mean")) << " +/- " << fmt(p.at("std")) << " (n "
      << p.at("n").get<std::size_t>() << ")\n";
  }
  const auto& t = d.at("text");
  o << "Text: mean CLIP tokens " << fmt(t.at("mean_clip_tokens"), 1) << ", vocabulary "
    << t.at("vocab_size").get<std::size_t>() << ", mean concept density " << fmt(t.at("mean_concept_density"), 2)
    << "\n";
  const auto& gates = d.at("gates");
  o << "Gates:";
  for (const char* name : {"geometric", "scale", "forward_axis"}) {
    const auto& gj = gates.at(name);
    o << " " << name << " ";
    if (gj.at("evaluated").get<std::size_t>() == 0)
      o << "skipped";
    else
      o << fmt(gj.at("pass_rate"), 1) << "%";
  }
  o << ", all " << fmt(gates.at("overall_pass_rate"), 1) << "%\n";
  o << "Gate thresholds: watertight " << (doc.config.gates.require_watertight ? "required" : "relaxed")
    << ", degenerate <= " << fmt(doc.config.gates.max_degenerate_fraction, 4) << ", faces "
    << doc.config.gates.min_faces << ".." << doc.config.gates.max_faces << "\n";
  return o.str();
}

std::string render_category_csv(const AuditDocument& doc) {
  std::ostringstream o;
  o << header_line(doc, "#");
  o << "category,axis,lower_m,upper_m,n,median_m,mean_m,trimmed_mean_m,min_m,max_m,stddev_m,cv,pct_plausible,mean_sps\n";
  for (const auto& r : category_rows(doc))
    o << csv_field(r.category) << ',' << r.axis << ',' << fmt(r.lower, 4) << ',' << fmt(r.upper, 4) << ','
      << r.n.get<std::size_t>() << ',' << fmt(r.median, 4) << ',' << fmt(r.mean, 4) << ',' << fmt(r.trimmed, 4)
      << ',' << fmt(r.min, 4) << ',' << fmt(r.max, 4) << ',' << fmt(r.stddev, 4) << ',' << fmt(r.cv, 4) << ','
      << fmt(r.plausible, 1) << ',' << fmt(r.sps, 4) << '\n';
  return o.str();
}

std::string render_category_markdown(const AuditDocument& doc) {
  std::ostringstream o;
  o << "<!-- " << doc.meta.tool << " " << doc.meta.version << " fingerprint " << doc.meta.fingerprint << " -->\n";
  o << "| Category | Interval (m) | N | Median (m) | Mean (m) | Trimmed mean (m) | Min (m) | Max (m) | CV | % Plausible "
       "| Mean SPS |\n";
  o << "|---|---|---:|---:|---:|---:|---:|---:|---:|---:|---:|\n";
  for (const auto& r : category_rows(doc))
    o << "| " << md_field(r.category) << " | [" << fmt(r.lower, 2) << ", " << fmt(r.upper, 2) << "] | "
      << r.n.get<std::size_t>() << " | " << fmt(r.median, 2) << " | " << fmt(r.mean, 2) << " | " << fmt(r.trimmed, 2)
      << " | " << fmt(r.min, 2) << " | " << fmt(r.max, 2) << " | " << fmt(r.cv, 2) << " | " << fmt(r.plausible, 1)
      << " | " << fmt(r.sps, 3) << " |\n";
  return o.str();
}

std::vector<HistogramBin> height_histogram(const std::vector<AuditRecord>& records) {
  std::map<std::string, std::map<int, std::size_t>> counts;
  for (const auto& r : records) {
    if (!(r.x > 0.0) || !std::isfinite(r.x)) continue;
    int k = static_cast<int>(std::floor(10.0 * std::log10(r.x)));
    // Guard the edges against log10 rounding.
    if (std::pow(10.0, (k + 1) / 10.0) <= r.x) ++k;
    if (std::pow(10.0, k / 10.0) > r.x) --k;
    ++counts[r.category][k];
  }
  std::vector<HistogramBin> out;
  for (const auto& [cat, bins] : counts)
    for (const auto& [k, c] : bins) out.push_back({cat, std::pow(10.0, k / 10.0), std::pow(10.0, (k + 1) / 10.0), c});
  return out;
}

std::vector<HistogramBin> face_histogram(const std::vector<AuditRecord>& records) {
  std::map<int, std::size_t> counts;
  for (const auto& r : records) {
    std::size_t f = r.health.face_count;
    int k = -1;
    while (f) {
      ++k;
      f >>= 1;
    }
    ++counts[k];
  }
  std::vector<HistogramBin> out;
  for (const auto& [k, c] : counts) {
    if (k < 0)
      out.push_back({"all", 0.0, 1.0, c});
    else
      out.push_back({"all", std::ldexp(1.0, k), std::ldexp(1.0, k + 1), c});
  }
  return out;
}

std::vector<HistogramBin> coherence_histogram(const std::vector<AuditRecord>& records, double bin_width) {
  const double nb = 2.0 / bin_width;
  const auto bins = static_cast<std::size_t>(std::llround(nb));
  if (!(bin_width > 0.0) || bins == 0 || std::fabs(nb - static_cast<double>(bins)) > 1e-9)
    fail(ErrorKind::InvalidArgument, "bin width must divide 2");
  std::vector<HistogramBin> out;
  const std::pair<const char*, std::optional<double> AuditRecord::*> pairs[] = {
      {"text_ref", &AuditRecord::coherence_text_ref},
      {"text_3d", &AuditRecord::coherence_text_3d},
      {"ref_3d", &AuditRecord::coherence_ref_3d}};
  for (const auto& [name, member] : pairs) {
    std::vector<std::size_t> h(bins, 0);
    bool any = false;
    for (const auto& r : records)
      if (const auto& c = r.*member) {
        ++h[crossmodal::histogram_bin(*c, bins)];
        any = true;
      }
    if (!any) continue;
    for (std::size_t b = 0; b < bins; ++b) {
      const double lo = -1.0 + 2.0 * static_cast<double>(b) / static_cast<double>(bins);
      const double hi = -1.0 + 2.0 * static_cast<double>(b + 1) / static_cast<double>(bins);
      out.push_back({name, lo, hi, h[b]});
    }
  }
  return out;
}

std::string histogram_csv(const std::vector<HistogramBin>& bins) {
  std::ostringstream o;
  o << "group,lo,hi,count\n";
  char buf[64];
  for (const auto& b : bins) {
    o << csv_field(b.group) << ',';
    std::snprintf(buf, sizeof buf, "%.6g,%.6g", b.lo, b.hi);
    o << buf << ',' << b.count << '\n';
  }
  return o.str();
}

void write_report_dir(const fs::path& dir, const json& document) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  const auto doc = parse_audit_document(document);
  write_file_text(dir / "audit.json", dump_document(document));
  write_file_text(dir / "summary.txt", render_prose(doc));
  write_file_text(dir / "categories.csv", render_category_csv(doc));
  write_file_text(dir / "categories.md", render_category_markdown(doc));
  const std::string stamp = "# fingerprint " + doc.meta.fingerprint + "\n";
  write_file_text(dir / "hist_heights.csv", stamp + histogram_csv(height_histogram(doc.records)));
  write_file_text(dir / "hist_faces.csv", stamp + histogram_csv(face_histogram(doc.records)));
  write_file_text(dir / "hist_coherence.csv",
                  stamp + histogram_csv(coherence_histogram(doc.records, doc.config.coherence_bin_width)));
}

AuditDocument read_report_dir(const fs::path& dir) {
  const auto text = read_file_text(dir / "audit.json");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::BadConfig, (dir / "audit.json").string() + ": " + e.what());
  }
  return parse_audit_document(j);
}

std::string render(const AuditDocument& doc, const json& raw, ReportFormat f) {
  switch (f) {
    case ReportFormat::structured: return dump_document(raw);
    case ReportFormat::tabular: return render_category_csv(doc);
    case ReportFormat::prose: return render_prose(doc);
  }
  return {};
}

}  // namespace bankaudit::report
