#include "bankaudit/geometry/mesh.hpp"

#include <string>

#include "bankaudit/core/error.hpp"

namespace bankaudit::geometry {

void MeshGeometry::validate() const {
  const auto n = positions.size();
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (auto idx : triangles[t]) {
      if (idx >= n) {
        fail(ErrorKind::MalformedGltf,
             "triangle " + std::to_string(t) + " references vertex " + std::to_string(idx) + " of " + std::to_string(n));
      }
    }
  }
  if (!uvs.empty() && uvs.size() != n) fail(ErrorKind::MalformedGltf, "uv count does not match position count");
}

void append_mesh(MeshGeometry& dst, const MeshGeometry& other) {
  const bool keep_uv = (dst.positions.empty() || dst.has_uv()) && other.has_uv();
  const auto base = static_cast<std::uint32_t>(dst.positions.size());
  dst.positions.insert(dst.positions.end(), other.positions.begin(), other.positions.end());
  for (const auto& t : other.triangles) dst.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  if (keep_uv) {
    dst.uvs.insert(dst.uvs.end(), other.uvs.begin(), other.uvs.end());
  } else {
    dst.uvs.clear();
  }
}

}  // namespace bankaudit::geometry
