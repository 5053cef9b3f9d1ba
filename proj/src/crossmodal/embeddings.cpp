#include "bankaudit/crossmodal/embeddings.hpp"

#include <unicode/utf8.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <set>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/io.hpp"
#include "bankaudit/simd/kernels.hpp"

namespace bankaudit::crossmodal {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr double kMinNorm = 1e-12;

struct Reader {
  std::span<const std::byte> b;
  std::size_t pos = 0;

  bool has(std::size_t n) const { return b.size() - pos >= n; }
  template <class T>
  T le() {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(std::to_integer<unsigned>(b[pos + i])) << (8 * i);
    pos += sizeof(T);
    return v;
  }
};

template <class T>
void put_le(std::vector<std::byte>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
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

double norm(std::span<const float> v) { return std::sqrt(simd::dot(v, v)); }

}  // namespace

std::string_view to_string(Modality m) noexcept {
  switch (m) {
    case Modality::text: return "text";
    case Modality::ref_image: return "ref_image";
    case Modality::view_px: return "view_px";
    case Modality::view_nx: return "view_nx";
    case Modality::view_py: return "view_py";
    case Modality::view_ny: return "view_ny";
    case Modality::query: return "query";
  }
  return "?";
}

Modality parse_modality(std::string_view s) {
  for (int t = 0; t <= 6; ++t)
    if (to_string(static_cast<Modality>(t)) == s) return static_cast<Modality>(t);
  fail(ErrorKind::InvalidArgument, "unknown modality '" + std::string(s) + "'");
}

RawTable parse_embeddings(std::span<const std::byte> bytes) {
  Reader r{bytes};
  if (!r.has(16) || std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorKind::BadHeader, "missing EMBT magic");
  r.pos = 4;
  const auto version = r.le<std::uint32_t>();
  if (version != kVersion) fail(ErrorKind::BadHeader, "unsupported version " + std::to_string(version));
  RawTable t;
  t.dim = r.le<std::uint32_t>();
  const auto count = r.le<std::uint32_t>();
  if (t.dim == 0) fail(ErrorKind::BadHeader, "dim is 0");
  std::set<std::pair<std::string, Modality>> seen;
  const std::size_t payload = std::size_t{t.dim} * 4;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string at = "row " + std::to_string(i) + " at offset " + std::to_string(r.pos);
    if (!r.has(2)) fail(ErrorKind::DimMismatch, at + ": file ends before the row");
    const auto len = r.le<std::uint16_t>();
    if (len == 0) fail(ErrorKind::BadHeader, at + ": empty id");
    if (!r.has(std::size_t{len} + 1)) fail(ErrorKind::DimMismatch, at + ": file ends inside the id");
    EmbeddingRow row;
    row.id.assign(reinterpret_cast<const char*>(bytes.data() + r.pos), len);
    r.pos += len;
    if (!valid_utf8(row.id)) fail(ErrorKind::BadHeader, at + ": id is not UTF-8");
    const auto tag = r.le<std::uint8_t>();
    if (tag > 6) fail(ErrorKind::BadHeader, at + ": modality tag " + std::to_string(tag));
    row.modality = static_cast<Modality>(tag);
    if (!r.has(payload))
      fail(ErrorKind::DimMismatch, at + ": " + std::to_string((bytes.size() - r.pos) / 4) + " floats left, dim is " +
                                       std::to_string(t.dim));
    row.values.resize(t.dim);
    for (auto& f : row.values) {
      f = std::bit_cast<float>(r.le<std::uint32_t>());
      if (!std::isfinite(f)) fail(ErrorKind::BadHeader, at + ": non-finite value");
    }
    if (!seen.emplace(row.id, row.modality).second)
      fail(ErrorKind::DuplicateRow, "(" + row.id + ", " + std::string(to_string(row.modality)) + ")");
    t.rows.push_back(std::move(row));
  }
  if (r.pos != bytes.size())
    fail(ErrorKind::DimMismatch, std::to_string(bytes.size() - r.pos) + " bytes after the last row");
  return t;
}

std::vector<std::byte> serialize_embeddings(const RawTable& t) {
  if (t.dim == 0) fail(ErrorKind::InvalidArgument, "dim is 0");
  std::vector<std::byte> out;
  out.reserve(16 + t.rows.size() * (3 + std::size_t{t.dim} * 4 + 16));
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, t.dim);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rows.size()));
  for (const auto& row : t.rows) {
    if (row.values.size() != t.dim)
      fail(ErrorKind::DimMismatch, "row '" + row.id + "' has " + std::to_string(row.values.size()) + " values");
    if (row.id.empty() || row.id.size() > 0xFFFF) fail(ErrorKind::InvalidArgument, "id length out of range");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(row.id.size()));
    for (char c : row.id) out.push_back(static_cast<std::byte>(c));
    out.push_back(static_cast<std::byte>(row.modality));
    for (float f : row.values) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

std::vector<float> l2_normalized(std::span<const float> v) {
  const double n = norm(v);
  if (!(n >= kMinNorm)) fail(ErrorKind::ZeroNorm, "vector norm " + std::to_string(n));
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / n);
  return out;
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) fail(ErrorKind::DimMismatch, "cosine of vectors with different lengths");
  const double na = norm(a), nb = norm(b);
  if (!(na >= kMinNorm) || !(nb >= kMinNorm)) fail(ErrorKind::ZeroNorm, "cosine with a zero vector");
  return std::clamp(simd::dot(a, b) / (na * nb), -1.0, 1.0);
}

EmbeddingTable EmbeddingTable::from_raw(const RawTable& raw) {
  EmbeddingTable t;
  t.dim_ = raw.dim;
  t.data_.reserve(raw.rows.size() * raw.dim);
  for (const auto& row : raw.rows) {
    if (row.values.size() != raw.dim) fail(ErrorKind::DimMismatch, "row '" + row.id + "'");
    if (!t.index_.emplace(std::make_pair(row.id, row.modality), t.ids_.size()).second)
      fail(ErrorKind::DuplicateRow, "(" + row.id + ", " + std::string(to_string(row.modality)) + ")");
    std::vector<float> unit;
    try {
      unit = l2_normalized(row.values);
    } catch (const Error&) {
      fail(ErrorKind::ZeroNorm, "row (" + row.id + ", " + std::string(to_string(row.modality)) + ")");
    }
    t.data_.insert(t.data_.end(), unit.begin(), unit.end());
    t.ids_.push_back(row.id);
    t.mods_.push_back(row.modality);
  }
  return t;
}

std::optional<std::span<const float>> EmbeddingTable::find(std::string_view id, Modality m) const {
  auto it = index_.find(std::make_pair(std::string(id), m));
  if (it == index_.end()) return std::nullopt;
  return row(it->second);
}

std::vector<std::string> EmbeddingTable::ids_with(Modality m) const {
  std::set<std::string> s;
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (mods_[i] == m) s.insert(ids_[i]);
  return {s.begin(), s.end()};
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
  return EmbeddingTable::from_raw(parse_embeddings(read_file_bytes(path)));
}

void write_embeddings(const std::filesystem::path& path, const RawTable& table) {
  write_file_bytes(path, serialize_embeddings(table));
}

}  // namespace bankaudit::crossmodal
