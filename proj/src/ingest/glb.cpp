#include "bankaudit/ingest/glb.hpp"

#include <cstring>
#include <string>

#include "bankaudit/core/error.hpp"

namespace bankaudit::ingest {
namespace {

std::uint32_t read_u32(std::span<const std::byte> b, std::size_t off) {
  return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
         (static_cast<std::uint32_t>(b[off + 2]) << 16) | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

std::string at(std::size_t off) { return " at offset " + std::to_string(off); }

}  // namespace

GlbContainer parse_glb(std::span<const std::byte> bytes) {
  if (bytes.size() < kGlbHeaderSize) {
    fail(ErrorKind::TruncatedChunk, "header needs 12 bytes, got " + std::to_string(bytes.size()) + at(0));
  }
  if (read_u32(bytes, 0) != kGlbMagic) fail(ErrorKind::BadMagic, "not a binary glTF container" + at(0));
  const auto version = read_u32(bytes, 4);
  if (version != kGlbVersion) fail(ErrorKind::UnsupportedVersion, "version " + std::to_string(version) + at(4));

  GlbContainer c;
  c.declared_length = read_u32(bytes, 8);
  if (c.declared_length < kGlbHeaderSize || c.declared_length > bytes.size()) {
    fail(ErrorKind::TruncatedChunk, "declared length " + std::to_string(c.declared_length) + " but " +
                                        std::to_string(bytes.size()) + " bytes present" + at(8));
  }

  std::size_t off = kGlbHeaderSize;
  bool first = true;
  while (off < c.declared_length) {
    if (c.declared_length - off < kChunkHeaderSize) fail(ErrorKind::TruncatedChunk, "partial chunk header" + at(off));
    const std::size_t len = read_u32(bytes, off);
    const auto type = read_u32(bytes, off + 4);
    const std::size_t data_off = off + kChunkHeaderSize;
    if (len > c.declared_length - data_off) {
      fail(ErrorKind::TruncatedChunk, "chunk of " + std::to_string(len) + " bytes overruns container" + at(off));
    }
    auto payload = bytes.subspan(data_off, len);
    if (first && type != kChunkJson) fail(ErrorKind::MalformedGltf, "first chunk is not JSON" + at(off));
    if (type == kChunkJson) {
      if (!first) fail(ErrorKind::MalformedGltf, "duplicate JSON chunk" + at(off));
      c.json_chunk.assign(reinterpret_cast<const char*>(payload.data()), payload.size());
    } else if (type == kChunkBin && !c.bin_chunk) {
      c.bin_chunk.emplace(payload.begin(), payload.end());
    } else {
      c.other_chunks.push_back({type, std::vector<std::byte>(payload.begin(), payload.end())});
    }
    first = false;
    off = data_off + len;
  }
  if (first) fail(ErrorKind::TruncatedChunk, "container holds no chunks" + at(kGlbHeaderSize));
  return c;
}

std::vector<std::byte> serialize_glb(const GlbContainer& c) {
  std::vector<std::byte> out;
  put_u32(out, kGlbMagic);
  put_u32(out, kGlbVersion);
  put_u32(out, 0);  // patched below
  auto emit = [&out](std::uint32_t type, const std::byte* data, std::size_t len, std::byte pad) {
    const std::size_t padded = (len + 3) & ~std::size_t{3};
    put_u32(out, static_cast<std::uint32_t>(padded));
    put_u32(out, type);
    out.insert(out.end(), data, data + len);
    out.insert(out.end(), padded - len, pad);
  };
  emit(kChunkJson, reinterpret_cast<const std::byte*>(c.json_chunk.data()), c.json_chunk.size(), std::byte{' '});
  if (c.bin_chunk) emit(kChunkBin, c.bin_chunk->data(), c.bin_chunk->size(), std::byte{0});
  for (const auto& ch : c.other_chunks) emit(ch.type, ch.data.data(), ch.data.size(), std::byte{0});
  const auto total = static_cast<std::uint32_t>(out.size());
  for (int i = 0; i < 4; ++i) out[8 + i] = static_cast<std::byte>((total >> (8 * i)) & 0xFF);
  return out;
}

}  // namespace bankaudit::ingest
