#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace bankaudit::text {

// Text normalization applied before pre-tokenization: the ftfy subset used by
// the reference CLIP tokenizer (entities, C1 controls, ligatures, full-width
// forms, curly quotes, line breaks, terminal escapes, control characters, NFC),
// then two rounds of lenient HTML unescaping, whitespace collapsing and
// lowercasing. Mojibake repair is not performed.
class TextCleaner {
 public:
  // Tables come from text_clean.json (see tools/gen_text_clean_tables.py).
  // Throws Error(BadTokenizer) on a missing or malformed table file.
  static TextCleaner load(const std::filesystem::path& tables_json);
  static TextCleaner from_json(const nlohmann::json& doc);

  std::string clean(std::string_view utf8) const;

  // Individual stages on UTF-32, exposed for testing.
  std::u32string fix_text(std::u32string_view text) const;
  std::u32string html_unescape(std::u32string_view text) const;
  std::u32string unescape_strict(std::u32string_view text) const;
  bool is_space(char32_t c) const;

  struct Tables;

 private:
  std::shared_ptr<const Tables> t_;
  std::u32string fix_segment(std::u32string seg, bool unescape) const;
};

std::u32string utf8_to_u32(std::string_view s);  // ill-formed bytes become U+FFFD
std::string u32_to_utf8(std::u32string_view s);
std::u32string nfc(std::u32string_view s);
std::u32string to_lower(std::u32string_view s);
bool is_letter(char32_t c);  // general category L*
bool is_number(char32_t c);  // general category N*
bool is_decimal_digit(char32_t c);

}  // namespace bankaudit::text
