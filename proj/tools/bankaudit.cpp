// bankaudit command line: audit, report, intervals derive, retrieval.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/io.hpp"
#include "bankaudit/crossmodal/retrieval.hpp"
#include "bankaudit/intervals/http_judge.hpp"
#include "bankaudit/report/render.hpp"

namespace fs = std::filesystem;
using namespace bankaudit;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kFatal = 1;
constexpr int kPartial = 2;

struct AuditArgs {
  fs::path assets, manifest, intervals, out;
  std::string decay = "gaussian", axis = "z", anchor_mode = "declared";
  double trim = 0.05, anchor_cap = 100.0, robust_trim = 1.0;
  fs::path tokenizer_dir, banks, stopwords, embeddings, classifier_fixture;
  long classifier_budget = -1;
  unsigned jobs = 1;
  bool allow_missing = false;
  std::optional<std::int64_t> epoch;
  bool relax_watertight = false;
  double max_degenerate = 0.01;
  std::size_t min_faces = 100, max_faces = 200000;
  double bin_width = 0.01;
};

std::string hash_file(const fs::path& p) { return sha256_hex(read_file_text(p)); }

std::string getenv_str(const char* name) {
  const char* v = std::getenv(name);
  return v ? v : "";
}

int run_audit_cmd(const AuditArgs& a) {
  report::AuditConfig cfg;
  cfg.decay = metrics::parse_decay(a.decay);
  cfg.trim = a.trim;
  cfg.axis = intervals::parse_measure_axis(a.axis);
  cfg.anchor.mode = metrics::parse_anchor_mode(a.anchor_mode);
  cfg.anchor.cap_m = a.anchor_cap;
  cfg.anchor.robust_trim_pct = a.robust_trim;
  cfg.gates.require_watertight = !a.relax_watertight;
  cfg.gates.max_degenerate_fraction = a.max_degenerate;
  cfg.gates.min_faces = a.min_faces;
  cfg.gates.max_faces = a.max_faces;
  cfg.allow_missing_intervals = a.allow_missing;
  cfg.jobs = std::max(1u, a.jobs);
  cfg.coherence_bin_width = a.bin_width;

  const fs::path tok_dir = a.tokenizer_dir.empty() ? text::TokenizerModel::default_dir() : a.tokenizer_dir;
  const fs::path banks_path = a.banks.empty() ? text::KeywordBanks::default_path() : a.banks;
  const fs::path stop_path = a.stopwords.empty() ? text::Stopwords::default_path() : a.stopwords;
  const auto tokenizer = text::TokenizerModel::load(tok_dir);
  const auto banks = text::KeywordBanks::load(banks_path);
  const auto stop = text::Stopwords::load(stop_path);

  report::AuditInputs in;
  const fs::path base = a.assets.empty() ? a.manifest.parent_path() : a.assets;
  in.manifest = ingest::parse_manifest(read_file_text(a.manifest), base);
  in.intervals = intervals::load_interval_file(a.intervals);
  in.text = {&tokenizer, &stop, &banks};

  report::ReportMeta meta;
  meta.inputs = {{"manifest", a.manifest.string()},
                 {"intervals", a.intervals.string()},
                 {"tokenizer", tok_dir.string()},
                 {"banks", banks_path.string()},
                 {"stopwords", stop_path.string()}};
  meta.hashes = {{"manifest", hash_file(a.manifest)},
                 {"intervals", hash_file(a.intervals)},
                 {"tokenizer", sha256_hex(hash_file(tok_dir / "vocab.json") + hash_file(tok_dir / "merges.txt"))},
                 {"banks", hash_file(banks_path)},
                 {"stopwords", hash_file(stop_path)}};

  std::optional<crossmodal::EmbeddingTable> table;
  if (!a.embeddings.empty()) {
    table = crossmodal::read_embeddings(a.embeddings);
    in.embeddings = &*table;
    meta.inputs["embeddings"] = a.embeddings.string();
    meta.hashes["embeddings"] = hash_file(a.embeddings);
  }

  std::unique_ptr<metrics::FrontClassifier> classifier;
  if (!a.classifier_fixture.empty()) {
    classifier = std::make_unique<metrics::FixtureClassifier>(
        metrics::FixtureClassifier::from_json_text(read_file_text(a.classifier_fixture)));
    meta.inputs["classifier"] = a.classifier_fixture.string();
    meta.hashes["classifier"] = hash_file(a.classifier_fixture);
  } else if (auto url = getenv_str("AUDIT_CLASSIFIER_URL"); !url.empty()) {
    classifier = std::make_unique<metrics::HttpClassifier>(url, std::chrono::milliseconds(30000));
    meta.inputs["classifier"] = url;
  }
  std::unique_ptr<metrics::BudgetedClassifier> budgeted;
  if (classifier && a.classifier_budget >= 0) {
    budgeted = std::make_unique<metrics::BudgetedClassifier>(*classifier, a.classifier_budget);
    cfg.forward_sequential = true;
  }
  in.classifier = budgeted ? budgeted.get() : classifier.get();

  meta.generated_at = a.epoch ? *a.epoch : static_cast<std::int64_t>(std::time(nullptr));
  meta.fingerprint = report::config_fingerprint(meta.hashes, cfg);

  const auto result = report::run_audit(in, cfg);
  report::write_report_dir(a.out, report::audit_document(result, cfg, meta));

  const auto& d = result.dashboard;
  std::cerr << "audited " << d.records << "/" << d.assets << " assets, " << d.failures << " failed; report in "
            << a.out.string() << "\n";
  for (const auto& f : result.failures) std::cerr << "  " << f.asset_id << ": " << f.message << "\n";
  return result.failures.empty() ? kOk : kPartial;
}

int run_report_cmd(const fs::path& dir, const std::string& format, const std::string& style) {
  const auto raw = json::parse(read_file_text(dir / "audit.json"));
  const auto doc = report::parse_audit_document(raw);
  const auto f = report::parse_report_format(format);
  if (f == report::ReportFormat::tabular && style == "markdown")
    std::cout << report::render_category_markdown(doc);
  else
    std::cout << report::render(doc, raw, f);
  return doc.failures.empty() ? kOk : kPartial;
}

struct DeriveArgs {
  fs::path categories, out;
  std::string provider_url, model, mode = "text";
  int runs = 3, retries = 2;
  double timeout_s = 30.0, delay_s = 0.5;
  bool refresh = false;
};

// One category per line, optionally followed by a tab and a reference image
// path for vision mode. '#' starts a comment.
std::vector<std::pair<std::string, fs::path>> read_categories(const fs::path& path) {
  std::vector<std::pair<std::string, fs::path>> out;
  std::istringstream in(read_file_text(path));
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      out.emplace_back(line, fs::path{});
    else
      out.emplace_back(line.substr(0, tab), path.parent_path() / line.substr(tab + 1));
  }
  if (out.empty()) fail(ErrorKind::BadConfig, path.string() + " lists no categories");
  return out;
}

std::string mime_for(const fs::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".jpg" || ext == ".jpeg" ? "image/jpeg" : "image/png";
}

int run_derive_cmd(const DeriveArgs& a) {
  intervals::JudgeConfig cfg;
  cfg.endpoint_url = a.provider_url;
  cfg.model_name = a.model;
  cfg.runs = a.runs;
  cfg.mode = intervals::parse_judge_mode(a.mode);
  cfg.max_retries = a.retries;
  cfg.timeout = std::chrono::milliseconds(static_cast<long>(a.timeout_s * 1000));
  cfg.request_delay = std::chrono::milliseconds(static_cast<long>(a.delay_s * 1000));
  auto transport = intervals::HttpChatTransport::from_env(cfg);
  intervals::IntervalCache cache(a.out);

  int failures = 0;
  for (const auto& [category, image] : read_categories(a.categories)) {
    if (!a.refresh && cache.get(category)) {
      std::cerr << category << ": cached\n";
      continue;
    }
    intervals::DeriveOptions opts;
    if (cfg.mode == intervals::JudgeMode::vision) {
      if (image.empty()) fail(ErrorKind::BadConfig, "vision mode needs an image for '" + category + "'");
      opts.image = intervals::ImageAttachment{mime_for(image), read_file_bytes(image)};
    }
    cache.claim(category, a.refresh);
    try {
      auto iv = intervals::derive_interval(category, cfg, transport, opts);
      std::cerr << category << ": [" << iv.lower << ", " << iv.upper << "] m\n";
      cache.commit(std::move(iv));
    } catch (const Error& e) {
      std::cerr << category << ": " << e.what() << "\n";
      ++failures;
    }
    cache.release(category);
    cache.save();
  }
  return failures ? kPartial : kOk;
}

struct RetrievalArgs {
  fs::path gallery, queries, qmeta, out;
  std::string ks = "1,5,10,25", pool = "mean";
  unsigned jobs = 1;
};

json retrieval_json(const crossmodal::RetrievalResult& r) {
  json j{{"pool", r.method == crossmodal::PoolMethod::mean ? "mean" : "max"},
         {"gallery_size", r.gallery_size},
         {"median_rank", r.median_rank}};
  for (const auto& [k, v] : r.recall_at) j["recall"][std::to_string(k)] = v;
  for (const auto& q : r.per_query)
    j["queries"].push_back({{"query_id", q.query_id},
                            {"target_asset_id", q.target_asset_id},
                            {"rank", q.rank},
                            {"score", q.target_score}});
  return j;
}

int run_retrieval_cmd(const RetrievalArgs& a) {
  const auto gallery_table = crossmodal::read_embeddings(a.gallery);
  const auto query_table = crossmodal::read_embeddings(a.queries);
  const auto meta = crossmodal::load_query_meta(a.qmeta);
  const auto gallery = crossmodal::build_gallery(gallery_table, crossmodal::parse_pool(a.pool));
  const auto r = crossmodal::retrieval(query_table, meta, gallery, crossmodal::parse_ks(a.ks), std::max(1u, a.jobs));
  std::cout << "queries " << r.per_query.size() << ", gallery " << r.gallery_size << ", pool " << a.pool << "\n";
  for (const auto& [k, v] : r.recall_at) std::cout << "R@" << k << " " << v << "\n";
  std::cout << "median rank " << r.median_rank << "\n";
  if (!a.out.empty()) write_file_text(a.out, retrieval_json(r).dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Audit 3D asset banks for spatial and semantic quality"};
  app.set_version_flag("--version", std::string("bankaudit ") + BANKAUDIT_VERSION);
  app.require_subcommand(1);

  AuditArgs aa;
  auto* audit = app.add_subcommand("audit", "Audit every asset in a manifest and write a report directory");
  audit->add_option("--assets", aa.assets, "Directory that manifest glb/hull paths are relative to");
  audit->add_option("--manifest", aa.manifest, "JSON Lines manifest")->required()->check(CLI::ExistingFile);
  audit->add_option("--intervals", aa.intervals, "Plausible-interval file")->required()->check(CLI::ExistingFile);
  audit->add_option("--out", aa.out, "Report directory")->required();
  audit->add_option("--decay", aa.decay, "gaussian|linear|lorentzian")->capture_default_str();
  audit->add_option("--trim", aa.trim, "Trimmed-mean fraction per tail")->capture_default_str();
  audit->add_option("--axis", aa.axis, "z|max")->capture_default_str();
  audit->add_option("--anchor-mode", aa.anchor_mode, "declared|nearest")->capture_default_str();
  audit->add_option("--anchor-cap", aa.anchor_cap, "Anchor error cap in meters")->capture_default_str();
  audit->add_option("--robust-trim", aa.robust_trim, "Robust bbox percentile trim")->capture_default_str();
  audit->add_option("--tokenizer-dir", aa.tokenizer_dir, "Directory with vocab.json and merges.txt");
  audit->add_option("--banks", aa.banks, "Keyword bank JSON");
  audit->add_option("--stopwords", aa.stopwords, "Stopword list");
  audit->add_option("--embeddings", aa.embeddings, "Embedding table for coherence");
  audit->add_option("--classifier-fixture", aa.classifier_fixture, "JSON answers for the forward-axis audit");
  audit->add_option("--classifier-budget", aa.classifier_budget, "Total forward-axis classifier calls");
  audit->add_option("--jobs", aa.jobs, "Worker threads")->capture_default_str();
  audit->add_flag("--allow-missing-intervals", aa.allow_missing, "Audit categories without an interval unscored");
  audit->add_option("--epoch", aa.epoch, "Fixed report timestamp (unix seconds)");
  audit->add_flag("--relax-watertight", aa.relax_watertight, "Do not require watertight meshes in the geometric gate");
  audit->add_option("--gate-max-degenerate", aa.max_degenerate, "Max degenerate face fraction")->capture_default_str();
  audit->add_option("--gate-min-faces", aa.min_faces, "Face band lower bound")->capture_default_str();
  audit->add_option("--gate-max-faces", aa.max_faces, "Face band upper bound")->capture_default_str();
  audit->add_option("--coherence-bin", aa.bin_width, "Coherence histogram bin width")->capture_default_str();

  fs::path report_dir;
  std::string format = "prose", style = "csv";
  auto* rep = app.add_subcommand("report", "Render a finished audit");
  rep->add_option("--audit", report_dir, "Report directory written by audit")->required();
  rep->add_option("--format", format, "prose|tabular|structured")->capture_default_str();
  rep->add_option("--style", style, "Tabular style: csv|markdown")->capture_default_str();

  DeriveArgs da;
  auto* ivs = app.add_subcommand("intervals", "Plausible-interval tools");
  ivs->require_subcommand(1);
  auto* derive = ivs->add_subcommand("derive", "Query a chat model for per-category intervals");
  derive->add_option("--categories", da.categories, "Category list")->required()->check(CLI::ExistingFile);
  derive->add_option("--provider-url", da.provider_url, "Chat-completions endpoint")->required();
  derive->add_option("--model", da.model, "Model name")->required();
  derive->add_option("--runs", da.runs, "Independent queries per category")->capture_default_str();
  derive->add_option("--mode", da.mode, "text|vision")->capture_default_str();
  derive->add_option("--retries", da.retries, "Retries per run")->capture_default_str();
  derive->add_option("--timeout", da.timeout_s, "Request timeout in seconds")->capture_default_str();
  derive->add_option("--delay", da.delay_s, "Pause between requests in seconds")->capture_default_str();
  derive->add_option("--out", da.out, "Interval file, also the cache")->required();
  derive->add_flag("--refresh", da.refresh, "Re-derive cached categories");

  RetrievalArgs ra;
  auto* ret = app.add_subcommand("retrieval", "Text-to-asset retrieval benchmark");
  ret->add_option("--gallery", ra.gallery, "Embedding table with four view rows per asset")->required();
  ret->add_option("--queries", ra.queries, "Embedding table with query rows")->required();
  ret->add_option("--qmeta", ra.qmeta, "Query metadata, JSON Lines")->required();
  ret->add_option("--k", ra.ks, "Comma-separated cutoffs")->capture_default_str();
  ret->add_option("--pool", ra.pool, "mean|max")->capture_default_str();
  ret->add_option("--jobs", ra.jobs, "Worker threads")->capture_default_str();
  ret->add_option("--out", ra.out, "Write per-query ranks as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kFatal;
  }

  try {
    if (*audit) return run_audit_cmd(aa);
    if (*rep) return run_report_cmd(report_dir, format, style);
    if (*derive) return run_derive_cmd(da);
    if (*ret) return run_retrieval_cmd(ra);
  } catch (const Error& e) {
    std::cerr << "bankaudit: " << e.what() << "\n";
    return kFatal;
  } catch (const std::exception& e) {
    std::cerr << "bankaudit: " << e.what() << "\n";
    return kFatal;
  }
  return kFatal;
}
