#include "bankaudit/text/tokenizer.hpp"

#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/io.hpp"

namespace bankaudit::text {

namespace {

constexpr std::string_view kEow = "</w>";

std::string read_or_bad(const std::filesystem::path& p) {
  try {
    return read_file_text(p);
  } catch (const Error& e) {
    fail(ErrorKind::BadTokenizer, e.what());
  }
}

// Printable bytes map to themselves, the rest to U+0100 upward in byte order.
void build_byte_maps(std::string (&enc)[256], std::unordered_map<char32_t, unsigned char>& dec) {
  auto keep = [](int b) { return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF); };
  char32_t next = 256;
  for (int b = 0; b < 256; ++b) {
    char32_t cp = keep(b) ? static_cast<char32_t>(b) : next++;
    enc[b] = u32_to_utf8(std::u32string(1, cp));
    dec.emplace(cp, static_cast<unsigned char>(b));
  }
}

bool contraction_at(std::u32string_view s, std::size_t i, std::size_t& len) {
  if (s[i] != U'\'' || i + 1 >= s.size()) return false;
  // Case-insensitive in the reference pattern; input is already lowercase,
  // but U+017F still folds to 's'.
  auto eq = [&](std::size_t k, char32_t c) {
    if (k >= s.size()) return false;
    char32_t x = s[k];
    if (x >= 'A' && x <= 'Z') x += 32;
    if (x == 0x17F) x = U's';
    return x == c;
  };
  static constexpr std::u32string_view kAlts[] = {U"s", U"t", U"re", U"ve", U"m", U"ll", U"d"};
  for (auto alt : kAlts) {
    bool ok = true;
    for (std::size_t k = 0; k < alt.size(); ++k) ok = ok && eq(i + 1 + k, alt[k]);
    if (ok) {
      len = 1 + alt.size();
      return true;
    }
  }
  return false;
}

}  // namespace

std::filesystem::path TokenizerModel::default_dir() { return std::filesystem::path(BANKAUDIT_DATA_DIR) / "tokenizer"; }

TokenizerModel TokenizerModel::load(const std::filesystem::path& dir) {
  auto m = std::make_shared<Model>();

  nlohmann::json vj = nlohmann::json::parse(read_or_bad(dir / "vocab.json"), nullptr, false);
  if (vj.is_discarded() || !vj.is_object()) fail(ErrorKind::BadTokenizer, "vocab.json: not a JSON object");
  for (const auto& [tok, id] : vj.items()) {
    if (!id.is_number_integer() || id.get<int64_t>() < 0 || id.get<int64_t>() > std::numeric_limits<int32_t>::max())
      fail(ErrorKind::BadTokenizer, "vocab.json: bad id for token '" + tok + "'");
    m->vocab.emplace(tok, id.get<int32_t>());
  }

  std::istringstream in(read_or_bad(dir / "merges.txt"));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (lineno == 1 && line.rfind("#version", 0) == 0)) continue;
    auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 == line.size() || line.find(' ', sp + 1) != std::string::npos)
      fail(ErrorKind::BadTokenizer, "merges.txt line " + std::to_string(lineno) + ": expected two symbols");
    std::string a = line.substr(0, sp), b = line.substr(sp + 1);
    if (!m->vocab.count(a + b))
      fail(ErrorKind::BadTokenizer,
           "merges.txt line " + std::to_string(lineno) + ": merge output '" + a + b + "' not in vocab");
    auto rank = static_cast<int32_t>(m->merges.size());
    if (!m->ranks.emplace(a + " " + b, rank).second)
      fail(ErrorKind::BadTokenizer, "merges.txt line " + std::to_string(lineno) + ": duplicate merge");
    m->merges.emplace_back(std::move(a), std::move(b));
  }
  if (m->merges.empty()) fail(ErrorKind::BadTokenizer, "merges.txt: no merges");

  build_byte_maps(m->byte_encoder, m->byte_decoder);
  for (const auto& sym : m->byte_encoder) {
    if (!m->vocab.count(sym) || !m->vocab.count(sym + std::string(kEow)))
      fail(ErrorKind::BadTokenizer, "vocab.json: missing base symbol '" + sym + "'");
  }

  auto tables = dir / "text_clean.json";
  if (!std::filesystem::exists(tables)) tables = default_dir() / "text_clean.json";
  m->cleaner = TextCleaner::load(tables);

  TokenizerModel t;
  t.m_ = std::move(m);
  return t;
}

std::vector<std::u32string> TokenizerModel::pre_tokenize(std::u32string_view s) const {
  std::vector<std::u32string> out;
  const TextCleaner& c = m_->cleaner;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t len = 0;
    if (contraction_at(s, i, len)) {
    } else if (is_letter(s[i])) {
      while (i + len < s.size() && is_letter(s[i + len])) ++len;
    } else if (is_number(s[i])) {
      len = 1;
    } else if (!c.is_space(s[i])) {
      while (i + len < s.size() && !c.is_space(s[i + len]) && !is_letter(s[i + len]) && !is_number(s[i + len]))
        ++len;
    } else {
      ++i;
      continue;
    }
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> TokenizerModel::bpe(std::string_view encoded) const {
  std::vector<std::string> word;
  auto u = utf8_to_u32(encoded);
  for (char32_t cp : u) word.push_back(u32_to_utf8(std::u32string(1, cp)));
  if (word.empty()) return word;
  word.back() += kEow;
  if (word.size() == 1) return word;

  const auto& ranks = m_->ranks;
  std::string key;
  while (word.size() > 1) {
    int32_t best = std::numeric_limits<int32_t>::max();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i + 1 < word.size(); ++i) {
      key.assign(word[i]).append(" ").append(word[i + 1]);
      auto it = ranks.find(key);
      if (it != ranks.end() && it->second < best) {
        best = it->second;
        best_i = i;
      }
    }
    if (best == std::numeric_limits<int32_t>::max()) break;
    const std::string first = word[best_i], second = word[best_i + 1];
    std::vector<std::string> merged;
    merged.reserve(word.size());
    for (std::size_t i = 0; i < word.size();) {
      if (i + 1 < word.size() && word[i] == first && word[i + 1] == second) {
        merged.push_back(first + second);
        i += 2;
      } else {
        merged.push_back(std::move(word[i]));
        ++i;
      }
    }
    word.swap(merged);
  }
  return word;
}

std::string TokenizerModel::decode_symbol(std::string_view symbol) const {
  if (symbol.size() >= kEow.size() && symbol.substr(symbol.size() - kEow.size()) == kEow)
    symbol.remove_suffix(kEow.size());
  std::string out;
  for (char32_t cp : utf8_to_u32(symbol)) {
    auto it = m_->byte_decoder.find(cp);
    if (it == m_->byte_decoder.end()) fail(ErrorKind::BadTokenizer, "symbol outside the byte alphabet");
    out.push_back(static_cast<char>(it->second));
  }
  return out;
}

std::vector<std::string> TokenizerModel::bpe_words(std::string_view text) const {
  std::vector<std::string> symbols;
  auto cleaned = utf8_to_u32(m_->cleaner.clean(text));
  for (const auto& w : pre_tokenize(cleaned)) {
    std::string enc;
    for (unsigned char b : u32_to_utf8(w)) enc += m_->byte_encoder[b];
    for (auto& s : bpe(enc)) symbols.push_back(std::move(s));
  }
  return symbols;
}

std::vector<std::string> TokenizerModel::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  for (const auto& s : bpe_words(text)) out.push_back(decode_symbol(s));
  return out;
}

std::vector<std::int32_t> TokenizerModel::encode(std::string_view text) const {
  std::vector<std::int32_t> out;
  for (const auto& s : bpe_words(text)) {
    auto it = m_->vocab.find(s);
    if (it == m_->vocab.end()) fail(ErrorKind::BadTokenizer, "symbol '" + s + "' not in vocab");
    out.push_back(it->second);
  }
  return out;
}

}  // namespace bankaudit::text
