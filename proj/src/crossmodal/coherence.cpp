#include "bankaudit/crossmodal/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "bankaudit/core/error.hpp"
#include "bankaudit/simd/kernels.hpp"

namespace bankaudit::crossmodal {

std::string_view to_string(PoolMethod p) noexcept { return p == PoolMethod::mean ? "mean" : "max_sim"; }

PoolMethod parse_pool(std::string_view s) {
  if (s == "mean") return PoolMethod::mean;
  if (s == "max" || s == "max_sim") return PoolMethod::max_sim;
  fail(ErrorKind::BadConfig, "unknown pooling '" + std::string(s) + "' (mean|max)");
}

std::string_view to_string(CoherencePair p) noexcept {
  switch (p) {
    case CoherencePair::text_ref: return "text_ref";
    case CoherencePair::text_3d: return "text_3d";
    case CoherencePair::ref_3d: return "ref_3d";
  }
  return "?";
}

PooledViews pool_views(std::span<const std::vector<float>> views, PoolMethod method) {
  if (views.size() != 4) fail(ErrorKind::InvalidArgument, "expected 4 views, got " + std::to_string(views.size()));
  const std::size_t dim = views[0].size();
  for (const auto& v : views)
    if (v.size() != dim || dim == 0) fail(ErrorKind::DimMismatch, "views differ in length");
  PooledViews p;
  p.method = method;
  std::vector<float> sum(dim, 0.0f);
  std::vector<double> acc(dim, 0.0);
  for (std::size_t k = 0; k < 4; ++k) {
    p.views[k] = l2_normalized(views[k]);
    for (std::size_t i = 0; i < dim; ++i) acc[i] += p.views[k][i];
  }
  for (std::size_t i = 0; i < dim; ++i) sum[i] = static_cast<float>(acc[i] / 4.0);
  try {
    p.mean = l2_normalized(sum);
  } catch (const Error&) {
    fail(ErrorKind::ZeroNorm, "mean of views cancels");
  }
  return p;
}

double pooled_similarity(const PooledViews& p, std::span<const float> q) {
  if (p.method == PoolMethod::mean) return simd::dot(p.mean, q);
  double best = -2.0;
  for (const auto& v : p.views) best = std::max(best, simd::dot(v, q));
  return best;
}

Gallery build_gallery(const EmbeddingTable& table, PoolMethod method) {
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < table.size(); ++i) {
    auto m = table.modality(i);
    if (std::find(kViews.begin(), kViews.end(), m) != kViews.end()) ++counts[table.id(i)];
  }
  Gallery g;
  for (const auto& [id, c] : counts) {
    if (c != 4) fail(ErrorKind::InvalidArgument, "asset '" + id + "' has " + std::to_string(c) + " of 4 views");
    std::vector<std::vector<float>> vs;
    for (auto m : kViews) {
      auto r = *table.find(id, m);
      vs.emplace_back(r.begin(), r.end());
    }
    g.ids.push_back(id);
    g.pooled.push_back(pool_views(vs, method));
  }
  return g;
}

std::size_t histogram_bin(double c, std::size_t bins) {
  double x = std::floor((std::clamp(c, -1.0, 1.0) + 1.0) * static_cast<double>(bins) / 2.0);
  return std::min(static_cast<std::size_t>(std::max(x, 0.0)), bins - 1);
}

CoherenceStats coherence_stats(const EmbeddingTable& table, CoherencePair pair, double bin_width) {
  const double nb = 2.0 / bin_width;
  if (!(bin_width > 0) || std::abs(nb - std::round(nb)) > 1e-9 || nb > 1e7)
    fail(ErrorKind::InvalidArgument, "bin width must divide 2");
  CoherenceStats s;
  s.pair = pair;
  s.bin_width = bin_width;
  s.histogram.assign(static_cast<std::size_t>(std::round(nb)), 0);

  const bool needs_3d = pair != CoherencePair::text_ref;
  Gallery g;
  if (needs_3d) g = build_gallery(table, PoolMethod::mean);
  auto pooled = [&](const std::string& id) -> const std::vector<float>* {
    auto it = std::lower_bound(g.ids.begin(), g.ids.end(), id);
    if (it == g.ids.end() || *it != id) return nullptr;
    return &g.pooled[static_cast<std::size_t>(it - g.ids.begin())].mean;
  };

  const Modality left = pair == CoherencePair::ref_3d ? Modality::ref_image : Modality::text;
  for (const auto& id : table.ids_with(left)) {
    auto a = *table.find(id, left);
    std::optional<std::span<const float>> b;
    if (pair == CoherencePair::text_ref) {
      b = table.find(id, Modality::ref_image);
    } else if (auto* p = pooled(id)) {
      b = std::span<const float>(*p);
    }
    if (!b) continue;
    s.per_asset.emplace_back(id, cosine(a, *b));
  }
  if (s.per_asset.empty()) fail(ErrorKind::NoOverlap, "no asset has both sides of " + std::string(to_string(pair)));

  s.n = s.per_asset.size();
  double sum = 0;
  for (const auto& [_, c] : s.per_asset) sum += c;
  s.mean = sum / static_cast<double>(s.n);
  double ss = 0;
  for (const auto& [_, c] : s.per_asset) {
    ss += (c - s.mean) * (c - s.mean);
    ++s.histogram[histogram_bin(c, s.histogram.size())];
  }
  s.stddev = std::sqrt(ss / static_cast<double>(s.n));
  return s;
}

}  // namespace bankaudit::crossmodal
