#pragma once

#include <span>

#include "bankaudit/core/vec.hpp"
#include "bankaudit/geometry/mesh.hpp"

namespace bankaudit::geometry {

// Incremental quickhull. Output faces are wound counter-clockwise seen from
// outside and only hull vertices are kept. Throws Error(DegenerateInput) for
// fewer than four points or a flat/collinear set.
MeshGeometry convex_hull(std::span<const Vec3> points);

struct HullReport {
  std::size_t hull_triangles = 0;
  double vertex_containment = 0.0;  // percent of mesh vertices inside the hull
  double volume_coverage = 0.0;     // V_hull / V_bbox(mesh); NaN when the bbox is flat
  double hull_volume = 0.0;
};

// Throws Error(NonConvexHull) when `hull` fails the half-space test against
// its own vertices, Error(EmptyMesh) when `mesh` has no vertices.
HullReport hull_report(const MeshGeometry& mesh, const MeshGeometry& hull);

}  // namespace bankaudit::geometry
