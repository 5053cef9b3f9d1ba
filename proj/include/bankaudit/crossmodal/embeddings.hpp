#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bankaudit::crossmodal {

enum class Modality : std::uint8_t {
  text = 0,
  ref_image = 1,
  view_px = 2,
  view_nx = 3,
  view_py = 4,
  view_ny = 5,
  query = 6,
};
inline constexpr std::array<Modality, 4> kViews{Modality::view_px, Modality::view_nx, Modality::view_py,
                                                Modality::view_ny};

std::string_view to_string(Modality m) noexcept;
Modality parse_modality(std::string_view s);

struct EmbeddingRow {
  std::string id;
  Modality modality = Modality::text;
  std::vector<float> values;
};

// As stored on disk, vectors untouched.
struct RawTable {
  std::uint32_t dim = 0;
  std::vector<EmbeddingRow> rows;
};

// File layout, all little-endian:
//   "EMBT" u32 version(1) u32 dim u32 row_count
//   row_count x { u16 id_len, id bytes, u8 modality, dim x f32 }
// Throws Error(BadHeader) for a bad magic/version/dim, an empty or non-UTF-8
// id, an unknown modality tag or non-finite values; Error(DimMismatch) when
// the payload ends inside a vector or bytes remain after the last row;
// Error(DuplicateRow) for a repeated (id, modality).
RawTable parse_embeddings(std::span<const std::byte> bytes);
// Throws Error(DimMismatch) for mixed lengths, Error(InvalidArgument) for a
// zero dim, an empty id or one longer than 65535 bytes.
std::vector<std::byte> serialize_embeddings(const RawTable& table);

// Rows normalized to unit length. Lookups by (id, modality).
class EmbeddingTable {
 public:
  // Throws Error(ZeroNorm) for a row with norm below 1e-12.
  static EmbeddingTable from_raw(const RawTable& raw);

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  Modality modality(std::size_t i) const { return mods_[i]; }
  std::optional<std::span<const float>> find(std::string_view id, Modality m) const;
  // Sorted, unique ids that have a row of modality m.
  std::vector<std::string> ids_with(Modality m) const;

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<Modality> mods_;
  std::vector<float> data_;
  std::map<std::pair<std::string, Modality>, std::size_t, std::less<>> index_;
};

EmbeddingTable read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const RawTable& table);

// Throws Error(ZeroNorm) below 1e-12.
std::vector<float> l2_normalized(std::span<const float> v);
double cosine(std::span<const float> a, std::span<const float> b);

}  // namespace bankaudit::crossmodal
