#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bankaudit/text/tokenizer.hpp"

namespace bankaudit::text {

inline constexpr std::array<std::string_view, 5> kAxes{"color", "material", "style", "shape", "component"};

// Keyword banks, one per axis in kAxes order. Keywords are lowercase and may
// be multi-word phrases separated by single spaces.
struct KeywordBanks {
  std::array<std::vector<std::u32string>, 5> axes;

  // {"version": 1, "axes": {"color": [...], ...}}. Throws Error(BadConfig).
  static KeywordBanks from_json(const nlohmann::json& doc);
  static KeywordBanks load(const std::filesystem::path& path);
  static std::filesystem::path default_path();
};

struct Stopwords {
  std::unordered_set<std::string> words;

  // One word per line; blank lines and '#' comments ignored. Throws
  // Error(BadConfig) when the file yields no words.
  static Stopwords parse(std::string_view text);
  static Stopwords load(const std::filesystem::path& path);
  static std::filesystem::path default_path();
};

// Keeps tokens that are valid UTF-8, entirely alphabetic, at least three code
// points long and not stopwords. Output preserves input order.
std::vector<std::string> meaningful_tokens(const std::vector<std::string>& tokens, const Stopwords& stop);

// Per-axis whole-word hits on the lowercased, whitespace-collapsed text.
std::array<bool, 5> concept_axes(std::string_view description, const KeywordBanks& banks);
int concept_density(std::string_view description, const KeywordBanks& banks);

struct AssetText {
  std::size_t clip_tokens = 0;
  std::size_t meaningful = 0;
  int density = 0;
  std::array<bool, 5> axes{};
};

struct TextStats {
  std::size_t n = 0;
  double mean_clip_tokens = 0.0;
  double mean_tokens = 0.0;  // meaningful tokens per description
  std::size_t vocab_size = 0;
  double mean_density = 0.0;
  std::array<double, 5> axis_coverage{};  // fraction of descriptions hitting each axis
  std::vector<AssetText> per_asset;
};

AssetText analyze_text(std::string_view description, const TokenizerModel& model, const Stopwords& stop,
                       const KeywordBanks& banks, std::vector<std::string>* meaningful_out = nullptr);

// Throws Error(EmptyDataset) for no descriptions.
TextStats dataset_text_stats(std::span<const std::string> descriptions, const TokenizerModel& model,
                             const Stopwords& stop, const KeywordBanks& banks);

}  // namespace bankaudit::text
