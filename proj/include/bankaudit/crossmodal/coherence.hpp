#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bankaudit/crossmodal/embeddings.hpp"

namespace bankaudit::crossmodal {

enum class PoolMethod { mean, max_sim };
std::string_view to_string(PoolMethod p) noexcept;
PoolMethod parse_pool(std::string_view s);

// Pooled asset representation. mean holds the unit mean of the views; views
// holds the four unit views, used by max_sim.
struct PooledViews {
  PoolMethod method = PoolMethod::mean;
  std::vector<float> mean;
  std::array<std::vector<float>, 4> views;
};

// Needs exactly four vectors of one length. Throws Error(InvalidArgument) for
// the wrong count, Error(DimMismatch) for unequal lengths and Error(ZeroNorm)
// when a view or the mean vanishes.
PooledViews pool_views(std::span<const std::vector<float>> views, PoolMethod method);
double pooled_similarity(const PooledViews& p, std::span<const float> q);

// Pooled 3D representations of every asset with all four views, sorted by id.
// An asset with one to three views is an Error(InvalidArgument).
struct Gallery {
  std::vector<std::string> ids;
  std::vector<PooledViews> pooled;
};
Gallery build_gallery(const EmbeddingTable& table, PoolMethod method);

enum class CoherencePair { text_ref, text_3d, ref_3d };
std::string_view to_string(CoherencePair p) noexcept;

struct CoherenceStats {
  CoherencePair pair = CoherencePair::text_ref;
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
  double bin_width = 0.01;
  std::vector<std::uint64_t> histogram;  // bins over [-1, 1]; 1.0 lands in the last bin
  std::vector<std::pair<std::string, double>> per_asset;
};

// Per-asset cosine between the two sides (3D side = mean-pooled views).
// Throws Error(NoOverlap) when no asset has both, Error(InvalidArgument) when
// 2 / bin_width is not an integer.
CoherenceStats coherence_stats(const EmbeddingTable& table, CoherencePair pair, double bin_width = 0.01);
std::size_t histogram_bin(double c, std::size_t bins);

}  // namespace bankaudit::crossmodal
