#include "bankaudit/ingest/image_probe.hpp"

#include <array>
#include <string>

#include "bankaudit/core/error.hpp"

namespace bankaudit::ingest {
namespace {

std::uint32_t be32(std::span<const std::byte> b, std::size_t off) {
  return (static_cast<std::uint32_t>(b[off]) << 24) | (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

std::uint32_t be16(std::span<const std::byte> b, std::size_t off) {
  return (static_cast<std::uint32_t>(b[off]) << 8) | static_cast<std::uint32_t>(b[off + 1]);
}

std::uint8_t u8(std::span<const std::byte> b, std::size_t off) { return static_cast<std::uint8_t>(b[off]); }

constexpr std::array<std::uint8_t, 8> kPngSignature{0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};

ImageDims probe_png(std::span<const std::byte> b) {
  // signature(8) + length(4) + "IHDR"(4) + width(4) + height(4)
  if (b.size() < 24) fail(ErrorKind::CorruptImageHeader, "PNG shorter than IHDR");
  if (be32(b, 8) != 13 || be32(b, 12) != 0x49484452) fail(ErrorKind::CorruptImageHeader, "PNG first chunk is not IHDR");
  ImageDims d{be32(b, 16), be32(b, 20)};
  if (d.width == 0 || d.height == 0) fail(ErrorKind::CorruptImageHeader, "PNG with zero dimension");
  return d;
}

bool is_sof(std::uint8_t marker) {
  // SOF0..SOF15 except DHT (C4), JPG (C8) and DAC (CC).
  return marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC;
}

ImageDims probe_jpeg(std::span<const std::byte> b) {
  std::size_t off = 2;
  while (off + 4 <= b.size()) {
    if (u8(b, off) != 0xFF) fail(ErrorKind::CorruptImageHeader, "JPEG marker expected at " + std::to_string(off));
    std::uint8_t marker = u8(b, off + 1);
    if (marker == 0xFF) {  // fill byte
      ++off;
      continue;
    }
    if (marker == 0xD8 || (marker >= 0xD0 && marker <= 0xD7) || marker == 0x01) {
      off += 2;
      continue;
    }
    if (marker == 0xD9 || marker == 0xDA) break;  // EOI / start of scan before any SOF
    const std::size_t seg = be16(b, off + 2);
    if (seg < 2) fail(ErrorKind::CorruptImageHeader, "JPEG segment length < 2");
    if (is_sof(marker)) {
      if (off + 2 + seg > b.size() || seg < 7) fail(ErrorKind::CorruptImageHeader, "truncated JPEG SOF");
      ImageDims d{be16(b, off + 7), be16(b, off + 5)};
      if (d.width == 0 || d.height == 0) fail(ErrorKind::CorruptImageHeader, "JPEG with zero dimension");
      return d;
    }
    off += 2 + seg;
  }
  fail(ErrorKind::CorruptImageHeader, "JPEG without SOF header");
}

}  // namespace

ImageDims probe_image(std::span<const std::byte> bytes) {
  if (bytes.size() >= 8) {
    bool png = true;
    for (std::size_t i = 0; i < 8; ++i) png = png && u8(bytes, i) == kPngSignature[i];
    if (png) return probe_png(bytes);
  }
  if (bytes.size() >= 3 && u8(bytes, 0) == 0xFF && u8(bytes, 1) == 0xD8) return probe_jpeg(bytes);
  fail(ErrorKind::CorruptImageHeader, "neither PNG nor JPEG signature");
}

}  // namespace bankaudit::ingest
