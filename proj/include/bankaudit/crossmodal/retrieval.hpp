#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bankaudit/crossmodal/coherence.hpp"

namespace bankaudit::crossmodal {

struct QueryMeta {
  std::string query_id;
  std::string query_text;
  std::string target_asset_id;
};

// JSON Lines, one {"query_id", "query_text", "target_asset_id"} object per
// line; blank lines skipped. Throws Error(MissingField) naming the line,
// Error(DuplicateId) for a repeated query_id.
std::vector<QueryMeta> parse_query_meta(std::string_view text);
std::vector<QueryMeta> load_query_meta(const std::filesystem::path& path);

struct QueryRank {
  std::string query_id;
  std::string target_asset_id;
  std::size_t rank = 0;  // 1-based
  double target_score = 0.0;
};

struct RetrievalResult {
  PoolMethod method = PoolMethod::mean;
  std::size_t gallery_size = 0;
  std::vector<QueryRank> per_query;
  std::vector<std::pair<std::size_t, double>> recall_at;
  std::size_t median_rank = 0;  // lower middle for even counts
};

// Ranks every gallery asset by similarity to each query (descending, ties by
// ascending asset id). Throws Error(MissingQuery) when a query has no
// modality-6 row, Error(MissingTarget) when its target is not in the gallery,
// Error(InvalidArgument) for empty or non-positive ks or no queries.
RetrievalResult retrieval(const EmbeddingTable& queries, const std::vector<QueryMeta>& meta,
                          const Gallery& gallery, std::vector<std::size_t> ks, unsigned jobs = 1);

std::vector<std::size_t> parse_ks(std::string_view csv);

}  // namespace bankaudit::crossmodal
