#include "bankaudit/text/text_metrics.hpp"

#include <unicode/utf8.h>

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/io.hpp"

namespace bankaudit::text {

namespace {

bool word_char(char32_t c) { return c == U'_' || is_letter(c) || is_number(c); }

// Lowercase with whitespace runs collapsed to one space.
std::u32string normalize_for_match(std::string_view s) {
  std::u32string lower = to_lower(utf8_to_u32(s));
  std::u32string out;
  out.reserve(lower.size());
  bool pending = false;
  for (char32_t c : lower) {
    bool ws = c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v' || c == 0xA0;
    if (ws) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(U' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

bool contains_word(std::u32string_view hay, std::u32string_view kw) {
  std::size_t pos = 0;
  while ((pos = hay.find(kw, pos)) != std::u32string_view::npos) {
    bool left = pos == 0 || !word_char(hay[pos - 1]);
    std::size_t end = pos + kw.size();
    bool right = end == hay.size() || !word_char(hay[end]);
    if (left && right) return true;
    ++pos;
  }
  return false;
}

bool valid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) return false;
  }
  return true;
}

}  // namespace

KeywordBanks KeywordBanks::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("axes") || !doc["axes"].is_object())
    fail(ErrorKind::BadConfig, "keyword banks: expected {\"axes\": {...}}");
  if (doc.contains("version") && doc["version"] != 1) fail(ErrorKind::BadConfig, "keyword banks: unsupported version");
  const auto& axes = doc["axes"];
  for (const auto& [k, _] : axes.items()) {
    if (std::find(kAxes.begin(), kAxes.end(), k) == kAxes.end())
      fail(ErrorKind::BadConfig, "keyword banks: unknown axis '" + k + "'");
  }
  KeywordBanks b;
  for (std::size_t a = 0; a < kAxes.size(); ++a) {
    std::string name(kAxes[a]);
    if (!axes.contains(name) || !axes[name].is_array() || axes[name].empty())
      fail(ErrorKind::BadConfig, "keyword banks: axis '" + name + "' missing or empty");
    for (const auto& kw : axes[name]) {
      if (!kw.is_string()) fail(ErrorKind::BadConfig, "keyword banks: non-string keyword in '" + name + "'");
      const std::string& raw = kw.get_ref<const std::string&>();
      std::u32string norm = normalize_for_match(raw);
      if (norm.empty()) fail(ErrorKind::BadConfig, "keyword banks: empty keyword in '" + name + "'");
      if (u32_to_utf8(norm) != raw)
        fail(ErrorKind::BadConfig, "keyword banks: keyword '" + raw + "' must be lowercase and single-spaced");
      b.axes[a].push_back(std::move(norm));
    }
  }
  return b;
}

KeywordBanks KeywordBanks::load(const std::filesystem::path& path) {
  nlohmann::json doc = nlohmann::json::parse(read_file_text(path), nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::BadConfig, path.string() + ": invalid JSON");
  return from_json(doc);
}

std::filesystem::path KeywordBanks::default_path() {
  return std::filesystem::path(BANKAUDIT_DATA_DIR) / "text" / "keyword_banks.json";
}

Stopwords Stopwords::parse(std::string_view text) {
  Stopwords s;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    s.words.insert(u32_to_utf8(to_lower(utf8_to_u32(line.substr(b, e - b + 1)))));
  }
  if (s.words.empty()) fail(ErrorKind::BadConfig, "stopword list is empty");
  return s;
}

Stopwords Stopwords::load(const std::filesystem::path& path) { return parse(read_file_text(path)); }

std::filesystem::path Stopwords::default_path() {
  return std::filesystem::path(BANKAUDIT_DATA_DIR) / "text" / "stopwords.txt";
}

std::vector<std::string> meaningful_tokens(const std::vector<std::string>& tokens, const Stopwords& stop) {
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (!valid_utf8(t)) continue;
    std::u32string u = utf8_to_u32(t);
    if (u.size() < 3 || !std::all_of(u.begin(), u.end(), is_letter)) continue;
    if (stop.words.count(u32_to_utf8(to_lower(u)))) continue;
    out.push_back(t);
  }
  return out;
}

std::array<bool, 5> concept_axes(std::string_view description, const KeywordBanks& banks) {
  std::array<bool, 5> hit{};
  std::u32string hay = normalize_for_match(description);
  for (std::size_t a = 0; a < banks.axes.size(); ++a) {
    for (const auto& kw : banks.axes[a]) {
      if (contains_word(hay, kw)) {
        hit[a] = true;
        break;
      }
    }
  }
  return hit;
}

int concept_density(std::string_view description, const KeywordBanks& banks) {
  auto hit = concept_axes(description, banks);
  return static_cast<int>(std::count(hit.begin(), hit.end(), true));
}

AssetText analyze_text(std::string_view description, const TokenizerModel& model, const Stopwords& stop,
                       const KeywordBanks& banks, std::vector<std::string>* meaningful_out) {
  AssetText r;
  auto tokens = model.tokenize(description);
  r.clip_tokens = tokens.size();
  auto kept = meaningful_tokens(tokens, stop);
  r.meaningful = kept.size();
  r.axes = concept_axes(description, banks);
  r.density = static_cast<int>(std::count(r.axes.begin(), r.axes.end(), true));
  if (meaningful_out) *meaningful_out = std::move(kept);
  return r;
}

TextStats dataset_text_stats(std::span<const std::string> descriptions, const TokenizerModel& model,
                             const Stopwords& stop, const KeywordBanks& banks) {
  if (descriptions.empty()) fail(ErrorKind::EmptyDataset, "no descriptions");
  TextStats s;
  s.n = descriptions.size();
  std::unordered_set<std::string> vocab;
  double clip = 0, tok = 0, dens = 0;
  std::array<std::size_t, 5> axis_hits{};
  std::vector<std::string> kept;
  for (const auto& d : descriptions) {
    AssetText a = analyze_text(d, model, stop, banks, &kept);
    vocab.insert(kept.begin(), kept.end());
    clip += static_cast<double>(a.clip_tokens);
    tok += static_cast<double>(a.meaningful);
    dens += a.density;
    for (std::size_t k = 0; k < 5; ++k) axis_hits[k] += a.axes[k];
    s.per_asset.push_back(a);
  }
  const double n = static_cast<double>(s.n);
  s.mean_clip_tokens = clip / n;
  s.mean_tokens = tok / n;
  s.mean_density = dens / n;
  s.vocab_size = vocab.size();
  for (std::size_t k = 0; k < 5; ++k) s.axis_coverage[k] = static_cast<double>(axis_hits[k]) / n;
  return s;
}

}  // namespace bankaudit::text
