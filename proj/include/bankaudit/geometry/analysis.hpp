#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bankaudit/core/vec.hpp"
#include "bankaudit/geometry/mesh.hpp"

namespace bankaudit::geometry {

inline constexpr double kDegenerateAreaEpsilon = 1e-12;  // m^2

struct Aabb {
  Vec3 min;
  Vec3 max;

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return (min + max) * 0.5; }
  double diagonal() const { return norm(extent()); }
  double volume() const {
    const Vec3 e = extent();
    return e.x * e.y * e.z;
  }
  // Inclusive, with an absolute slack.
  bool contains(Vec3 p, double slack = 0.0) const;
};

struct HealthFlags {
  bool watertight = false;
  // Same edge-valence predicate as watertight; the two coincide by definition.
  bool manifold = false;
  double degenerate_fraction = 0.0;
  std::size_t face_count = 0;
  bool has_uv = false;
  // Diagnostics beyond the headline flags.
  std::size_t boundary_edges = 0;
  std::size_t nonmanifold_edges = 0;
  std::size_t degenerate_faces = 0;
  bool winding_consistent = false;
};

// Indices of vertices referenced by at least one triangle, ascending. A mesh
// without triangles is treated as a point cloud: every vertex counts.
std::vector<std::uint32_t> referenced_vertices(const MeshGeometry& m);

Aabb bbox(const MeshGeometry& m);
Aabb bbox_of_points(std::span<const Vec3> points);

HealthFlags health(const MeshGeometry& m);

double triangle_area(Vec3 a, Vec3 b, Vec3 c);

// Absolute enclosed volume via signed tetrahedra (divergence theorem).
// Throws Error(NotWatertight) for open meshes.
double mesh_volume(const MeshGeometry& m);

struct VolumeMoments {
  double signed_volume = 0.0;
  Vec3 centroid;
};
// First moments of the enclosed solid; meaningful for watertight meshes only.
VolumeMoments volume_moments(const MeshGeometry& m);

}  // namespace bankaudit::geometry
