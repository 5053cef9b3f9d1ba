#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace bankaudit::ingest {

struct ImageDims {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  friend bool operator==(ImageDims, ImageDims) = default;
};

// Reads width/height from a PNG IHDR or JPEG SOFn header without decoding
// pixels. Throws Error(CorruptImageHeader) for anything else.
ImageDims probe_image(std::span<const std::byte> bytes);

}  // namespace bankaudit::ingest
