#include "bankaudit/geometry/analysis.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "bankaudit/core/error.hpp"
#include "bankaudit/simd/kernels.hpp"

namespace bankaudit::geometry {

bool Aabb::contains(Vec3 p, double slack) const {
  for (int i = 0; i < 3; ++i) {
    if (p[i] < min[i] - slack || p[i] > max[i] + slack) return false;
  }
  return true;
}

std::vector<std::uint32_t> referenced_vertices(const MeshGeometry& m) {
  std::vector<std::uint32_t> out;
  if (m.triangles.empty()) {
    out.resize(m.positions.size());
    for (std::uint32_t i = 0; i < out.size(); ++i) out[i] = i;
    return out;
  }
  std::vector<char> used(m.positions.size(), 0);
  for (const auto& t : m.triangles) {
    for (auto idx : t) {
      if (idx < used.size()) used[idx] = 1;
    }
  }
  for (std::uint32_t i = 0; i < used.size(); ++i) {
    if (used[i]) out.push_back(i);
  }
  return out;
}

namespace {

Aabb bbox_of_soa(const std::vector<double>& xs, const std::vector<double>& ys, const std::vector<double>& zs) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Aabb box{{inf, inf, inf}, {-inf, -inf, -inf}};
  simd::minmax(xs, box.min.x, box.max.x);
  simd::minmax(ys, box.min.y, box.max.y);
  simd::minmax(zs, box.min.z, box.max.z);
  return box;
}

}  // namespace

Aabb bbox_of_points(std::span<const Vec3> points) {
  if (points.empty()) fail(ErrorKind::EmptyMesh, "bounding box of zero points");
  std::vector<double> xs(points.size()), ys(points.size()), zs(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    xs[i] = points[i].x;
    ys[i] = points[i].y;
    zs[i] = points[i].z;
  }
  return bbox_of_soa(xs, ys, zs);
}

Aabb bbox(const MeshGeometry& m) {
  const auto ref = referenced_vertices(m);
  if (ref.empty()) fail(ErrorKind::EmptyMesh, "mesh has no vertices");
  std::vector<double> xs(ref.size()), ys(ref.size()), zs(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const Vec3& p = m.positions[ref[i]];
    xs[i] = p.x;
    ys[i] = p.y;
    zs[i] = p.z;
  }
  return bbox_of_soa(xs, ys, zs);
}

double triangle_area(Vec3 a, Vec3 b, Vec3 c) { return 0.5 * norm(cross(b - a, c - a)); }

HealthFlags health(const MeshGeometry& m) {
  struct EdgeUse {
    std::uint32_t forward = 0;   // lo -> hi
    std::uint32_t backward = 0;  // hi -> lo
  };
  HealthFlags h;
  h.face_count = m.face_count();
  h.has_uv = m.has_uv();
  if (m.triangles.empty()) return h;

  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(m.triangles.size() * 2);
  for (const auto& t : m.triangles) {
    const bool repeated = t[0] == t[1] || t[1] == t[2] || t[0] == t[2];
    if (repeated || triangle_area(m.positions[t[0]], m.positions[t[1]], m.positions[t[2]]) < kDegenerateAreaEpsilon) {
      ++h.degenerate_faces;
    }
    for (int k = 0; k < 3; ++k) {
      const std::uint32_t a = t[k];
      const std::uint32_t b = t[(k + 1) % 3];
      if (a == b) continue;  // collapsed edge contributes no boundary
      const std::uint32_t lo = std::min(a, b);
      const std::uint32_t hi = std::max(a, b);
      auto& use = edges[(static_cast<std::uint64_t>(lo) << 32) | hi];
      if (a == lo) {
        ++use.forward;
      } else {
        ++use.backward;
      }
    }
  }

  bool consistent = true;
  for (const auto& [key, use] : edges) {
    const auto valence = use.forward + use.backward;
    if (valence == 1) ++h.boundary_edges;
    if (valence > 2) ++h.nonmanifold_edges;
    if (valence != 2 || use.forward != 1) consistent = false;
  }
  h.watertight = h.boundary_edges == 0 && h.nonmanifold_edges == 0 && !edges.empty();
  h.manifold = h.watertight;
  h.winding_consistent = consistent && !edges.empty();
  h.degenerate_fraction = static_cast<double>(h.degenerate_faces) / static_cast<double>(h.face_count);
  return h;
}

VolumeMoments volume_moments(const MeshGeometry& m) {
  // Signed tetrahedra (apex, a, b, c): volume a.(b x c)/6, centroid (a+b+c)/4
  // in apex-relative coordinates. For a closed surface the apex choice does not
  // change the result; a vertex of the mesh keeps the products well-scaled.
  VolumeMoments out;
  if (m.triangles.empty()) return out;
  const Vec3 apex = m.positions[m.triangles.front()[0]];
  double vol6 = 0.0;
  Vec3 moment;
  for (const auto& t : m.triangles) {
    const Vec3 a = m.positions[t[0]] - apex;
    const Vec3 b = m.positions[t[1]] - apex;
    const Vec3 c = m.positions[t[2]] - apex;
    const double v = dot(a, cross(b, c));
    vol6 += v;
    moment += (a + b + c) * v;
  }
  out.signed_volume = vol6 / 6.0;
  out.centroid = vol6 != 0.0 ? apex + moment / (4.0 * vol6) : apex;
  return out;
}

double mesh_volume(const MeshGeometry& m) {
  if (!health(m).watertight) fail(ErrorKind::NotWatertight, "volume requires a closed mesh");
  return std::abs(volume_moments(m).signed_volume);
}

}  // namespace bankaudit::geometry
