#include "bankaudit/crossmodal/retrieval.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/io.hpp"
#include "bankaudit/simd/kernels.hpp"

namespace bankaudit::crossmodal {

std::vector<QueryMeta> parse_query_meta(std::string_view text) {
  std::vector<QueryMeta> out;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "query file line " + std::to_string(lineno);
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorKind::MissingField, where + ": not a JSON object");
    QueryMeta q;
    for (auto [key, dst] : {std::pair{"query_id", &q.query_id}, std::pair{"query_text", &q.query_text},
                            std::pair{"target_asset_id", &q.target_asset_id}}) {
      if (!j.contains(key) || !j[key].is_string()) fail(ErrorKind::MissingField, where + ": '" + key + "'");
      *dst = j[key].get<std::string>();
    }
    if (q.query_id.empty() || q.target_asset_id.empty()) fail(ErrorKind::MissingField, where + ": empty id");
    if (!seen.insert(q.query_id).second) fail(ErrorKind::DuplicateId, where + ": query_id '" + q.query_id + "'");
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<QueryMeta> load_query_meta(const std::filesystem::path& path) {
  return parse_query_meta(read_file_text(path));
}

std::vector<std::size_t> parse_ks(std::string_view csv) {
  std::vector<std::size_t> ks;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    auto comma = csv.find(',', pos);
    auto tok = csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    std::size_t k = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), k);
    if (ec != std::errc{} || p != tok.data() + tok.size() || k == 0)
      fail(ErrorKind::BadConfig, "bad k list '" + std::string(csv) + "'");
    ks.push_back(k);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return ks;
}

RetrievalResult retrieval(const EmbeddingTable& queries, const std::vector<QueryMeta>& meta, const Gallery& gallery,
                          std::vector<std::size_t> ks, unsigned jobs) {
  if (meta.empty()) fail(ErrorKind::InvalidArgument, "no queries");
  if (ks.empty() || std::find(ks.begin(), ks.end(), 0u) != ks.end())
    fail(ErrorKind::InvalidArgument, "ks must be positive");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (gallery.ids.empty()) fail(ErrorKind::MissingTarget, "gallery is empty");
  if (!std::is_sorted(gallery.ids.begin(), gallery.ids.end()))
    fail(ErrorKind::InvalidArgument, "gallery ids must be sorted");

  const std::size_t G = gallery.ids.size();
  std::vector<std::size_t> target_index(meta.size());
  std::vector<std::span<const float>> qvec(meta.size());
  for (std::size_t i = 0; i < meta.size(); ++i) {
    auto q = queries.find(meta[i].query_id, Modality::query);
    if (!q) fail(ErrorKind::MissingQuery, meta[i].query_id);
    if (q->size() != gallery.pooled.front().mean.size())
      fail(ErrorKind::DimMismatch, "query '" + meta[i].query_id + "' vs gallery dim");
    qvec[i] = *q;
    auto it = std::lower_bound(gallery.ids.begin(), gallery.ids.end(), meta[i].target_asset_id);
    if (it == gallery.ids.end() || *it != meta[i].target_asset_id)
      fail(ErrorKind::MissingTarget, meta[i].query_id + " -> " + meta[i].target_asset_id);
    target_index[i] = static_cast<std::size_t>(it - gallery.ids.begin());
  }

  const PoolMethod method = gallery.pooled.front().method;
  const std::size_t dim = gallery.pooled.front().mean.size();
  // Row-major matrices for the dot kernel: one for mean, four for max_sim.
  std::vector<std::vector<float>> mats(method == PoolMethod::mean ? 1 : 4);
  for (std::size_t m = 0; m < mats.size(); ++m) {
    mats[m].reserve(G * dim);
    for (const auto& p : gallery.pooled) {
      const auto& v = method == PoolMethod::mean ? p.mean : p.views[m];
      mats[m].insert(mats[m].end(), v.begin(), v.end());
    }
  }

  RetrievalResult r;
  r.method = method;
  r.gallery_size = G;
  r.per_query.resize(meta.size());
  auto score_range = [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores(G), tmp(G);
    for (std::size_t i = begin; i < end; ++i) {
      simd::dot_rows(mats[0], dim, qvec[i], scores);
      for (std::size_t m = 1; m < mats.size(); ++m) {
        simd::dot_rows(mats[m], dim, qvec[i], tmp);
        for (std::size_t g = 0; g < G; ++g) scores[g] = std::max(scores[g], tmp[g]);
      }
      const std::size_t t = target_index[i];
      const double st = scores[t];
      std::size_t rank = 1;
      for (std::size_t g = 0; g < G; ++g)
        if (scores[g] > st || (scores[g] == st && g < t)) ++rank;
      r.per_query[i] = {meta[i].query_id, meta[i].target_asset_id, rank, st};
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(meta.size())));
  if (jobs == 1) {
    score_range(0, meta.size());
  } else {
    std::vector<std::thread> ts;
    const std::size_t chunk = (meta.size() + jobs - 1) / jobs;
    for (std::size_t b = 0; b < meta.size(); b += chunk) ts.emplace_back(score_range, b, std::min(meta.size(), b + chunk));
    for (auto& t : ts) t.join();
  }

  std::vector<std::size_t> ranks;
  for (const auto& q : r.per_query) ranks.push_back(q.rank);
  std::sort(ranks.begin(), ranks.end());
  r.median_rank = ranks[(ranks.size() - 1) / 2];
  double prev = 0.0;
  for (std::size_t k : ks) {
    auto hit = static_cast<std::size_t>(std::upper_bound(ranks.begin(), ranks.end(), k) - ranks.begin());
    double rec = static_cast<double>(hit) / static_cast<double>(ranks.size());
    if (rec < prev) fail(ErrorKind::InvalidArgument, "recall is not monotone in k");
    prev = rec;
    r.recall_at.emplace_back(k, rec);
  }
  return r;
}

}  // namespace bankaudit::crossmodal
