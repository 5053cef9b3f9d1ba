#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "bankaudit/text/clean.hpp"

namespace bankaudit::text {

// Byte-level BPE model in the CLIP layout: vocab.json (token -> id),
// merges.txt (ranked pairs, optional "#version" header) and the cleaner
// tables. Immutable once loaded; safe to share across threads.
class TokenizerModel {
 public:
  // Reads vocab.json, merges.txt and text_clean.json from dir. A directory
  // without text_clean.json falls back to the bundled tables.
  // Throws Error(BadTokenizer) on missing files, malformed content, or a
  // merge whose output is not in the vocab.
  static TokenizerModel load(const std::filesystem::path& dir);
  static std::filesystem::path default_dir();

  // Decoded tokens (raw UTF-8 bytes, end-of-word marker stripped). A token
  // may hold a partial UTF-8 sequence when BPE splits a multi-byte character.
  std::vector<std::string> tokenize(std::string_view text) const;
  std::vector<std::int32_t> encode(std::string_view text) const;

  // Splits already-cleaned text into words by the CLIP pre-tokenizer rules.
  std::vector<std::u32string> pre_tokenize(std::u32string_view cleaned) const;
  // BPE symbols for one byte-encoded word, last symbol carrying the marker.
  std::vector<std::string> bpe(std::string_view encoded_word) const;
  std::string decode_symbol(std::string_view symbol) const;

  const std::unordered_map<std::string, std::int32_t>& vocab() const { return m_->vocab; }
  const std::vector<std::pair<std::string, std::string>>& merges() const { return m_->merges; }
  std::string_view end_of_word_marker() const { return "</w>"; }
  const TextCleaner& cleaner() const { return m_->cleaner; }

 private:
  struct Model {
    std::unordered_map<std::string, std::int32_t> vocab;
    std::vector<std::pair<std::string, std::string>> merges;
    std::unordered_map<std::string, std::int32_t> ranks;  // "a b" -> rank
    std::string byte_encoder[256];
    std::unordered_map<char32_t, unsigned char> byte_decoder;
    TextCleaner cleaner;
  };
  std::shared_ptr<const Model> m_;

  std::vector<std::string> bpe_words(std::string_view text) const;
};

}  // namespace bankaudit::text
