#pragma once

// Procedural meshes for tests.

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "bankaudit/geometry/mesh.hpp"

namespace bankaudit::testing {

using geometry::MeshGeometry;

// Axis-aligned box from `lo` to `hi`, 8 vertices, 12 outward CCW triangles.
inline MeshGeometry box(Vec3 lo, Vec3 hi) {
  MeshGeometry m;
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 2; ++x) m.positions.push_back({x ? hi.x : lo.x, y ? hi.y : lo.y, z ? hi.z : lo.z});
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

inline MeshGeometry unit_cube() { return box({-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}); }

inline MeshGeometry tetra(Vec3 o = {}, double s = 1.0) {
  MeshGeometry m;
  m.positions = {o, o + Vec3{s, 0, 0}, o + Vec3{0, s, 0}, o + Vec3{0, 0, s}};
  m.triangles = {{0, 2, 1}, {0, 1, 3}, {0, 3, 2}, {1, 2, 3}};
  return m;
}

inline MeshGeometry translated(MeshGeometry m, Vec3 t) {
  for (auto& p : m.positions) p = p + t;
  return m;
}

inline MeshGeometry scaled(MeshGeometry m, Vec3 s) {
  for (auto& p : m.positions) p = {p.x * s.x, p.y * s.y, p.z * s.z};
  return m;
}

inline MeshGeometry without_last_face(MeshGeometry m) {
  m.triangles.pop_back();
  return m;
}

// Rotation about +Z by k quarter turns (exact).
inline MeshGeometry quarter_turns_z(MeshGeometry m, int k) {
  for (auto& p : m.positions) {
    for (int i = 0; i < ((k % 4) + 4) % 4; ++i) p = {-p.y, p.x, p.z};
  }
  return m;
}

inline std::vector<Vec3> random_in_ball(std::mt19937_64& rng, std::size_t n, double radius = 1.0) {
  std::uniform_real_distribution<double> u(-radius, radius);
  std::vector<Vec3> pts;
  while (pts.size() < n) {
    Vec3 p{u(rng), u(rng), u(rng)};
    if (dot(p, p) <= radius * radius) pts.push_back(p);
  }
  return pts;
}

}  // namespace bankaudit::testing
