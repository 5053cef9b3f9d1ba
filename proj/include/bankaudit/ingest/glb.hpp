#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bankaudit::ingest {

inline constexpr std::uint32_t kGlbMagic = 0x46546C67;  // "glTF"
inline constexpr std::uint32_t kGlbVersion = 2;
inline constexpr std::uint32_t kChunkJson = 0x4E4F534A;
inline constexpr std::uint32_t kChunkBin = 0x004E4942;
inline constexpr std::size_t kGlbHeaderSize = 12;
inline constexpr std::size_t kChunkHeaderSize = 8;

struct GlbChunk {
  std::uint32_t type = 0;
  std::vector<std::byte> data;
};

// Binary glTF container split into its chunks. Chunk payloads keep their
// on-disk padding.
struct GlbContainer {
  std::string json_chunk;
  std::optional<std::vector<std::byte>> bin_chunk;
  std::uint32_t declared_length = 0;
  // Chunks of unknown type, in file order after JSON/BIN.
  std::vector<GlbChunk> other_chunks;
};

// Throws Error(BadMagic | UnsupportedVersion | TruncatedChunk | MalformedGltf);
// messages carry the byte offset of the failure.
GlbContainer parse_glb(std::span<const std::byte> bytes);

// Inverse of parse_glb at chunk level. Pads chunks to 4 bytes (JSON with
// spaces, others with zeros) and recomputes declared_length.
std::vector<std::byte> serialize_glb(const GlbContainer& c);

}  // namespace bankaudit::ingest
