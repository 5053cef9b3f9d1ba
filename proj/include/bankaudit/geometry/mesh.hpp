#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bankaudit/core/vec.hpp"

namespace bankaudit::geometry {

using Triangle = std::array<std::uint32_t, 3>;

// Indexed triangle mesh in meters, asset-local frame, +Z up.
struct MeshGeometry {
  std::vector<Vec3> positions;
  std::vector<Triangle> triangles;
  // Either empty or one entry per position.
  std::vector<Vec2> uvs;

  std::size_t face_count() const noexcept { return triangles.size(); }
  bool has_uv() const noexcept { return !uvs.empty() && uvs.size() == positions.size(); }

  // Throws Error(MalformedGltf) if an index is out of range or uvs are mis-sized.
  void validate() const;
};

// Appends `other` with its indices rebased. Drops uvs unless both sides have them.
void append_mesh(MeshGeometry& dst, const MeshGeometry& other);

}  // namespace bankaudit::geometry
