#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bankaudit/core/vec.hpp"

namespace bankaudit::ingest {

enum class AnchorType { bottom, top, center };

std::string_view to_string(AnchorType a) noexcept;
// Throws Error(BadConfig) for anything but "bottom", "top", "center".
AnchorType parse_anchor_type(std::string_view s);

// Where an asset's collision hull lives: a separate GLB, or a named node
// inside a GLB (possibly the asset's own file).
struct HullRef {
  std::filesystem::path file;
  std::string node;  // empty: the whole file is the hull
};

struct ManifestEntry {
  std::string asset_id;
  std::string category;
  std::string subcategory;
  std::string description;
  AnchorType anchor_type = AnchorType::bottom;
  std::optional<Vec3> est_dims;
  std::filesystem::path glb_path;    // resolved against the manifest directory
  std::filesystem::path image_path;  // empty when absent
  std::optional<HullRef> hull;
};

// One JSON object per line; blank lines are skipped. Required keys:
// asset_id, category, anchor_type, glb_path. Throws Error(DuplicateId) and
// Error(MissingField) naming the field and 1-based line.
std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::filesystem::path& base_dir);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

}  // namespace bankaudit::ingest
