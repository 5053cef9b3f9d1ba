#include "bankaudit/text/clean.hpp"

#include <unicode/uchar.h>
#include <unicode/unorm2.h>
#include <unicode/ustring.h>
#include <unicode/utf16.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/io.hpp"

namespace bankaudit::text {

struct TextCleaner::Tables {
  std::unordered_map<std::u32string, std::u32string> html5;   // name without '&'
  std::unordered_map<std::u32string, std::u32string> strict;  // "&name;"
  std::unordered_map<char32_t, std::u32string> width;
  std::unordered_map<char32_t, std::u32string> ligatures;
  std::unordered_map<char32_t, std::u32string> c1;
  std::unordered_map<char32_t, std::u32string> invalid_charrefs;
  std::unordered_set<char32_t> invalid_codepoints;
  std::unordered_set<char32_t> control;
  std::unordered_set<char32_t> whitespace;
};

std::u32string utf8_to_u32(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  while (i < n) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    out.push_back(c < 0 ? U'�' : static_cast<char32_t>(c));
  }
  return out;
}

std::string u32_to_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    uint8_t buf[4];
    int32_t len = 0;
    U8_APPEND_UNSAFE(buf, len, static_cast<UChar32>(c));
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
  }
  return out;
}

namespace {

std::u16string to_u16(std::u32string_view s) {
  std::u16string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    if (c <= 0xFFFF) {
      out.push_back(static_cast<char16_t>(c));
    } else {
      out.push_back(static_cast<char16_t>(U16_LEAD(c)));
      out.push_back(static_cast<char16_t>(U16_TRAIL(c)));
    }
  }
  return out;
}

std::u32string from_u16(const std::u16string& s) {
  std::u32string out;
  out.reserve(s.size());
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  while (i < n) {
    UChar32 c;
    U16_NEXT(s.data(), i, n, c);
    out.push_back(static_cast<char32_t>(c));
  }
  return out;
}

// Runs an ICU string transform that reports the needed size on overflow.
template <class F>
std::u16string icu_transform(const std::u16string& src, F&& f) {
  std::u16string dst(src.size() + 16, u'\0');
  for (int attempt = 0; attempt < 2; ++attempt) {
    UErrorCode err = U_ZERO_ERROR;
    int32_t len = f(dst.data(), static_cast<int32_t>(dst.size()), src.data(), static_cast<int32_t>(src.size()), &err);
    if (err == U_BUFFER_OVERFLOW_ERROR) {
      dst.assign(static_cast<std::size_t>(len), u'\0');
      continue;
    }
    if (U_FAILURE(err)) fail(ErrorKind::InvalidArgument, std::string("ICU: ") + u_errorName(err));
    dst.resize(static_cast<std::size_t>(len));
    return dst;
  }
  fail(ErrorKind::InvalidArgument, "ICU: buffer sizing failed");
}

}  // namespace

std::u32string nfc(std::u32string_view s) {
  UErrorCode err = U_ZERO_ERROR;
  const UNormalizer2* norm = unorm2_getNFCInstance(&err);
  if (U_FAILURE(err)) fail(ErrorKind::InvalidArgument, "ICU: no NFC instance");
  auto out = icu_transform(to_u16(s), [norm](UChar* d, int32_t dn, const UChar* src, int32_t sn, UErrorCode* e) {
    return unorm2_normalize(norm, src, sn, d, dn, e);
  });
  return from_u16(out);
}

std::u32string to_lower(std::u32string_view s) {
  auto out = icu_transform(to_u16(s), [](UChar* d, int32_t dn, const UChar* src, int32_t sn, UErrorCode* e) {
    return u_strToLower(d, dn, src, sn, "", e);
  });
  return from_u16(out);
}

bool is_letter(char32_t c) {
  switch (u_charType(static_cast<UChar32>(c))) {
    case U_UPPERCASE_LETTER:
    case U_LOWERCASE_LETTER:
    case U_TITLECASE_LETTER:
    case U_MODIFIER_LETTER:
    case U_OTHER_LETTER:
      return true;
    default:
      return false;
  }
}

bool is_number(char32_t c) {
  switch (u_charType(static_cast<UChar32>(c))) {
    case U_DECIMAL_DIGIT_NUMBER:
    case U_LETTER_NUMBER:
    case U_OTHER_NUMBER:
      return true;
    default:
      return false;
  }
}

bool is_decimal_digit(char32_t c) { return u_charType(static_cast<UChar32>(c)) == U_DECIMAL_DIGIT_NUMBER; }

namespace {

std::u32string u32(const nlohmann::json& j) { return utf8_to_u32(j.get<std::string>()); }

char32_t key_cp(const std::string& k) {
  std::size_t used = 0;
  unsigned long v = std::stoul(k, &used);
  if (used != k.size() || v > 0x10FFFF) throw std::invalid_argument("code point key");
  return static_cast<char32_t>(v);
}

void load_cp_map(const nlohmann::json& doc, const char* key, std::unordered_map<char32_t, std::u32string>& dst) {
  for (const auto& [k, v] : doc.at(key).items()) dst.emplace(key_cp(k), u32(v));
}

void load_cp_set(const nlohmann::json& doc, const char* key, std::unordered_set<char32_t>& dst) {
  for (const auto& v : doc.at(key)) dst.insert(static_cast<char32_t>(v.get<uint32_t>()));
}

bool ascii_alnum(char32_t c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool ascii_digit(char32_t c) { return c >= '0' && c <= '9'; }
bool ascii_hex(char32_t c) { return ascii_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F'); }

void replace_all(std::u32string& s, std::u32string_view from, std::u32string_view to) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = s.find(from, pos);
    if (hit == std::u32string::npos) break;
    out.append(s, pos, hit - pos);
    out.append(to);
    pos = hit + from.size();
  }
  out.append(s, pos, std::u32string::npos);
  s.swap(out);
}

}  // namespace

TextCleaner TextCleaner::from_json(const nlohmann::json& doc) {
  auto t = std::make_shared<Tables>();
  try {
    for (const auto& [k, v] : doc.at("html5").items()) t->html5.emplace(utf8_to_u32(k), u32(v));
    for (const auto& [k, v] : doc.at("strict_entities").items()) t->strict.emplace(utf8_to_u32(k), u32(v));
    load_cp_map(doc, "width_map", t->width);
    load_cp_map(doc, "ligatures", t->ligatures);
    load_cp_map(doc, "c1_map", t->c1);
    load_cp_map(doc, "invalid_charrefs", t->invalid_charrefs);
    load_cp_set(doc, "invalid_codepoints", t->invalid_codepoints);
    load_cp_set(doc, "control_chars", t->control);
    load_cp_set(doc, "whitespace", t->whitespace);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadTokenizer, std::string("text_clean tables: ") + e.what());
  } catch (const std::logic_error& e) {
    fail(ErrorKind::BadTokenizer, std::string("text_clean tables: ") + e.what());
  }
  if (t->html5.empty() || t->whitespace.empty() || t->c1.size() != 32)
    fail(ErrorKind::BadTokenizer, "text_clean tables: incomplete");
  TextCleaner c;
  c.t_ = std::move(t);
  return c;
}

TextCleaner TextCleaner::load(const std::filesystem::path& tables_json) {
  std::string raw;
  try {
    raw = read_file_text(tables_json);
  } catch (const Error& e) {
    fail(ErrorKind::BadTokenizer, e.what());
  }
  nlohmann::json doc = nlohmann::json::parse(raw, nullptr, false);
  if (doc.is_discarded()) fail(ErrorKind::BadTokenizer, tables_json.string() + ": invalid JSON");
  return from_json(doc);
}

bool TextCleaner::is_space(char32_t c) const { return t_->whitespace.count(c) != 0; }

std::u32string TextCleaner::unescape_strict(std::u32string_view s) const {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    if (s[i] != U'&') {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t j = i + 1;
    if (j < n && s[j] == U'#') ++j;
    std::size_t k = j;
    while (k < n && k - j < 24 && ascii_alnum(s[k])) ++k;
    if (k == j || k >= n || s[k] != U';') {
      out.push_back(s[i++]);
      continue;
    }
    std::u32string_view m = s.substr(i, k + 1 - i);
    if (auto it = t_->strict.find(std::u32string(m)); it != t_->strict.end()) {
      out += it->second;
    } else if (m.size() > 1 && m[1] == U'#') {
      std::u32string u = html_unescape(m);
      if (u.find(U';') != std::u32string::npos)
        out += m;
      else
        out += u;
    } else {
      out += m;
    }
    i = k + 1;
  }
  return out;
}

std::u32string TextCleaner::html_unescape(std::u32string_view s) const {
  if (s.find(U'&') == std::u32string_view::npos) return std::u32string(s);
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    if (s[i] != U'&') {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t j = i + 1;
    if (j < n && s[j] == U'#') {
      std::size_t k = j + 1;
      int base = 10;
      while (k < n && ascii_digit(s[k])) ++k;
      if (k == j + 1) {
        if (k < n && (s[k] == U'x' || s[k] == U'X')) {
          base = 16;
          k = j + 2;
          while (k < n && ascii_hex(s[k])) ++k;
          if (k == j + 2) k = 0;
        } else {
          k = 0;
        }
      }
      if (k == 0) {
        out.push_back(s[i++]);
        continue;
      }
      std::size_t digits_begin = base == 16 ? j + 2 : j + 1;
      uint64_t num = 0;
      for (std::size_t d = digits_begin; d < k; ++d) {
        char32_t c = s[d];
        unsigned v = ascii_digit(c) ? unsigned(c - '0') : unsigned((c | 0x20) - 'a' + 10);
        num = std::min<uint64_t>(num * static_cast<uint64_t>(base) + v, 0x7FFFFFFF);
      }
      if (k < n && s[k] == U';') ++k;
      if (auto it = t_->invalid_charrefs.find(static_cast<char32_t>(num)); it != t_->invalid_charrefs.end()) {
        out += it->second;
      } else if ((num >= 0xD800 && num <= 0xDFFF) || num > 0x10FFFF) {
        out.push_back(U'�');
      } else if (!t_->invalid_codepoints.count(static_cast<char32_t>(num))) {
        out.push_back(static_cast<char32_t>(num));
      }
      i = k;
      continue;
    }
    auto name_char = [](char32_t c) {
      return c != U'\t' && c != U'\n' && c != U'\f' && c != U' ' && c != U'<' && c != U'&' && c != U'#' &&
             c != U';';
    };
    std::size_t k = j;
    while (k < n && k - j < 32 && name_char(s[k])) ++k;
    if (k == j) {
      out.push_back(s[i++]);
      continue;
    }
    if (k < n && s[k] == U';') ++k;
    std::u32string name(s.substr(j, k - j));
    if (auto it = t_->html5.find(name); it != t_->html5.end()) {
      out += it->second;
    } else {
      bool found = false;
      for (std::size_t x = name.size() - 1; x > 1; --x) {
        if (auto p = t_->html5.find(name.substr(0, x)); p != t_->html5.end()) {
          out += p->second;
          out.append(name, x, std::u32string::npos);
          found = true;
          break;
        }
      }
      if (!found) {
        out.push_back(U'&');
        out += name;
      }
    }
    i = k;
  }
  return out;
}

std::u32string TextCleaner::fix_segment(std::u32string text, bool unescape) const {
  const Tables& t = *t_;
  auto translate = [](std::u32string& s, const std::unordered_map<char32_t, std::u32string>& map) {
    std::u32string out;
    out.reserve(s.size());
    for (char32_t c : s) {
      auto it = map.find(c);
      if (it == map.end())
        out.push_back(c);
      else
        out += it->second;
    }
    s.swap(out);
  };
  while (true) {
    const std::u32string orig = text;
    if (unescape) text = unescape_strict(text);
    translate(text, t.c1);
    translate(text, t.ligatures);
    translate(text, t.width);
    for (char32_t& c : text) {
      if (c == 0x02BC || (c >= 0x2018 && c <= 0x201B))
        c = U'\'';
      else if (c >= 0x201C && c <= 0x201F)
        c = U'"';
    }
    replace_all(text, U"\r\n", U"\n");
    for (char32_t& c : text)
      if (c == U'\r' || c == 0x2028 || c == 0x2029 || c == 0x85) c = U'\n';
    // ESC [ (digits|;)* letter
    {
      std::u32string out;
      out.reserve(text.size());
      std::size_t i = 0;
      while (i < text.size()) {
        if (text[i] == 0x1B && i + 1 < text.size() && text[i + 1] == U'[') {
          std::size_t k = i + 2;
          while (k < text.size() && (text[k] == U';' || is_decimal_digit(text[k]))) ++k;
          if (k < text.size() && ((text[k] >= 'a' && text[k] <= 'z') || (text[k] >= 'A' && text[k] <= 'Z'))) {
            i = k + 1;
            continue;
          }
        }
        out.push_back(text[i++]);
      }
      text.swap(out);
    }
    std::erase_if(text, [&](char32_t c) { return t.control.count(c) != 0; });
    text = nfc(text);
    if (text == orig) return text;
  }
}

std::u32string TextCleaner::fix_text(std::u32string_view text) const {
  constexpr std::size_t kMaxSegment = 1000000;
  bool unescape = true;
  std::u32string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t brk = text.find(U'\n', pos);
    std::size_t end = brk == std::u32string_view::npos ? text.size() : brk + 1;
    if (end - pos > kMaxSegment) end = pos + kMaxSegment;
    std::u32string seg(text.substr(pos, end - pos));
    if (unescape && seg.find(U'<') != std::u32string::npos) unescape = false;
    out += fix_segment(std::move(seg), unescape);
    pos = end;
  }
  return out;
}

std::string TextCleaner::clean(std::string_view utf8) const {
  std::u32string s = fix_text(utf8_to_u32(utf8));
  s = html_unescape(html_unescape(s));
  std::u32string joined;
  joined.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) {
      if (!joined.empty()) joined.push_back(U' ');
      joined.append(s, start, i - start);
    }
  }
  return u32_to_utf8(to_lower(joined));
}

}  // namespace bankaudit::text
