#include "bankaudit/geometry/convex_hull.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>

#include "bankaudit/core/error.hpp"
#include "bankaudit/geometry/analysis.hpp"
#include "bankaudit/simd/kernels.hpp"

namespace bankaudit::geometry {
namespace {

struct Face {
  std::array<std::uint32_t, 3> v{};
  Vec3 normal;  // unit, outward
  double offset = 0.0;
  std::vector<std::uint32_t> outside;
  bool alive = true;
};

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

class QuickHull {
 public:
  explicit QuickHull(std::span<const Vec3> pts) : pts_(pts) {
    double scale = 0.0;
    for (const auto& p : pts_) scale = std::max({scale, std::abs(p.x), std::abs(p.y), std::abs(p.z)});
    eps_ = 1e-10 * scale;
    if (eps_ == 0.0) eps_ = std::numeric_limits<double>::min();
  }

  MeshGeometry run() {
    build_simplex();
    std::size_t cursor = 0;
    while (true) {
      // Faces appended later are processed later; scan forward for work.
      while (cursor < faces_.size() && (!faces_[cursor].alive || faces_[cursor].outside.empty())) ++cursor;
      if (cursor == faces_.size()) break;
      add_point(cursor);
    }
    return extract();
  }

 private:
  double distance(const Face& f, std::uint32_t p) const { return dot(f.normal, pts_[p]) - f.offset; }

  bool make_face(std::uint32_t a, std::uint32_t b, std::uint32_t c, Face& f) const {
    const Vec3 n = cross(pts_[b] - pts_[a], pts_[c] - pts_[a]);
    const double len = norm(n);
    if (len == 0.0) return false;
    f.v = {a, b, c};
    f.normal = n / len;
    f.offset = dot(f.normal, pts_[a]);
    return true;
  }

  void build_simplex() {
    const auto n = static_cast<std::uint32_t>(pts_.size());
    if (n < 4) fail(ErrorKind::DegenerateInput, "convex hull needs at least 4 points");

    // Extreme points along each axis; the widest pair seeds the simplex.
    std::array<std::uint32_t, 6> ext{};
    for (std::uint32_t i = 0; i < n; ++i) {
      for (int ax = 0; ax < 3; ++ax) {
        if (pts_[i][ax] < pts_[ext[2 * ax]][ax]) ext[2 * ax] = i;
        if (pts_[i][ax] > pts_[ext[2 * ax + 1]][ax]) ext[2 * ax + 1] = i;
      }
    }
    std::uint32_t i0 = 0, i1 = 0;
    double best = -1.0;
    for (int ax = 0; ax < 3; ++ax) {
      const double d = norm(pts_[ext[2 * ax + 1]] - pts_[ext[2 * ax]]);
      if (d > best) {
        best = d;
        i0 = ext[2 * ax];
        i1 = ext[2 * ax + 1];
      }
    }
    if (best <= eps_) fail(ErrorKind::DegenerateInput, "all points coincide");

    const Vec3 dir = (pts_[i1] - pts_[i0]) / norm(pts_[i1] - pts_[i0]);
    std::uint32_t i2 = 0;
    best = -1.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      const Vec3 r = pts_[i] - pts_[i0];
      const double d = norm(r - dir * dot(r, dir));
      if (d > best) {
        best = d;
        i2 = i;
      }
    }
    if (best <= eps_) fail(ErrorKind::DegenerateInput, "points are collinear");

    Face base;
    make_face(i0, i1, i2, base);
    std::uint32_t i3 = 0;
    best = -1.0;
    for (std::uint32_t i = 0; i < n; ++i) {
      const double d = std::abs(distance(base, i));
      if (d > best) {
        best = d;
        i3 = i;
      }
    }
    if (best <= eps_) fail(ErrorKind::DegenerateInput, "points are coplanar");

    const Vec3 centroid = (pts_[i0] + pts_[i1] + pts_[i2] + pts_[i3]) * 0.25;
    const std::array<std::array<std::uint32_t, 3>, 4> tets{{{i0, i1, i2}, {i0, i3, i1}, {i1, i3, i2}, {i2, i3, i0}}};
    for (auto tri : tets) {
      Face f;
      make_face(tri[0], tri[1], tri[2], f);
      if (dot(f.normal, centroid) - f.offset > 0.0) {
        std::swap(tri[1], tri[2]);
        make_face(tri[0], tri[1], tri[2], f);
      }
      push_face(std::move(f));
    }

    std::vector<std::uint32_t> rest;
    rest.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      if (i != i0 && i != i1 && i != i2 && i != i3) rest.push_back(i);
    }
    assign(rest, 0);
  }

  void push_face(Face f) {
    const auto id = static_cast<std::uint32_t>(faces_.size());
    for (int k = 0; k < 3; ++k) edges_[edge_key(f.v[k], f.v[(k + 1) % 3])] = id;
    faces_.push_back(std::move(f));
  }

  // Assigns each point to the face it is farthest above among faces_[first..].
  void assign(const std::vector<std::uint32_t>& points, std::size_t first) {
    for (auto p : points) {
      double best = eps_;
      std::size_t owner = faces_.size();
      for (std::size_t f = first; f < faces_.size(); ++f) {
        if (!faces_[f].alive) continue;
        const double d = distance(faces_[f], p);
        if (d > best) {
          best = d;
          owner = f;
        }
      }
      if (owner != faces_.size()) faces_[owner].outside.push_back(p);
    }
  }

  void add_point(std::size_t face_id) {
    const Face& seed = faces_[face_id];
    std::uint32_t eye = seed.outside.front();
    double far = distance(seed, eye);
    for (auto p : seed.outside) {
      const double d = distance(seed, p);
      if (d > far) {
        far = d;
        eye = p;
      }
    }

    // Flood the faces visible from the eye, starting at the seed so the
    // visible region stays connected.
    std::vector<std::uint32_t> visible;
    std::vector<char> mark(faces_.size(), 0);
    std::deque<std::uint32_t> queue{static_cast<std::uint32_t>(face_id)};
    mark[face_id] = 1;
    while (!queue.empty()) {
      const auto f = queue.front();
      queue.pop_front();
      visible.push_back(f);
      for (int k = 0; k < 3; ++k) {
        const auto it = edges_.find(edge_key(faces_[f].v[(k + 1) % 3], faces_[f].v[k]));
        if (it == edges_.end()) continue;
        const auto nb = it->second;
        if (mark[nb] || !faces_[nb].alive) continue;
        if (distance(faces_[nb], eye) > eps_) {
          mark[nb] = 1;
          queue.push_back(nb);
        }
      }
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> horizon;
    std::vector<std::uint32_t> orphans;
    for (auto f : visible) {
      for (int k = 0; k < 3; ++k) {
        const auto a = faces_[f].v[k];
        const auto b = faces_[f].v[(k + 1) % 3];
        const auto it = edges_.find(edge_key(b, a));
        if (it == edges_.end() || !mark[it->second]) horizon.emplace_back(a, b);
      }
      for (auto p : faces_[f].outside) {
        if (p != eye) orphans.push_back(p);
      }
    }
    for (auto f : visible) {
      for (int k = 0; k < 3; ++k) edges_.erase(edge_key(faces_[f].v[k], faces_[f].v[(k + 1) % 3]));
      faces_[f].alive = false;
      faces_[f].outside.clear();
      faces_[f].outside.shrink_to_fit();
    }

    const std::size_t first_new = faces_.size();
    for (auto [a, b] : horizon) {
      Face f;
      if (!make_face(a, b, eye, f)) {
        // Zero-area sliver on the horizon: keep the topology, borrow a
        // neighbouring normal so distances stay finite.
        f.v = {a, b, eye};
        f.normal = faces_[visible.front()].normal;
        f.offset = dot(f.normal, pts_[a]);
      }
      push_face(std::move(f));
    }
    assign(orphans, first_new);
  }

  MeshGeometry extract() const {
    MeshGeometry out;
    std::unordered_map<std::uint32_t, std::uint32_t> remap;
    for (const auto& f : faces_) {
      if (!f.alive) continue;
      Triangle tri{};
      for (int k = 0; k < 3; ++k) {
        auto [it, inserted] = remap.emplace(f.v[k], static_cast<std::uint32_t>(out.positions.size()));
        if (inserted) out.positions.push_back(pts_[f.v[k]]);
        tri[k] = it->second;
      }
      out.triangles.push_back(tri);
    }
    return out;
  }

  std::span<const Vec3> pts_;
  double eps_ = 0.0;
  std::vector<Face> faces_;
  std::unordered_map<std::uint64_t, std::uint32_t> edges_;
};

}  // namespace

MeshGeometry convex_hull(std::span<const Vec3> points) { return QuickHull(points).run(); }

HullReport hull_report(const MeshGeometry& mesh, const MeshGeometry& hull) {
  const auto ref = referenced_vertices(mesh);
  if (ref.empty()) fail(ErrorKind::EmptyMesh, "mesh has no vertices");
  const auto hull_ref = referenced_vertices(hull);
  if (hull.triangles.empty() || hull_ref.size() < 4) fail(ErrorKind::NonConvexHull, "hull has no volume");

  // Hull vertices as SoA, oriented planes relative to the hull's vertex centroid.
  std::vector<double> hx, hy, hz;
  Vec3 centroid;
  for (auto i : hull_ref) {
    const Vec3& p = hull.positions[i];
    hx.push_back(p.x);
    hy.push_back(p.y);
    hz.push_back(p.z);
    centroid += p;
  }
  centroid = centroid / static_cast<double>(hull_ref.size());
  const double hull_tol = 1e-6 * bbox(hull).diagonal();

  std::vector<simd::Plane> planes;
  planes.reserve(hull.triangles.size());
  for (const auto& t : hull.triangles) {
    const Vec3& a = hull.positions[t[0]];
    Vec3 n = cross(hull.positions[t[1]] - a, hull.positions[t[2]] - a);
    const double len = norm(n);
    if (len == 0.0) continue;
    n = n / len;
    double offset = dot(n, a);
    if (dot(n, centroid) - offset > 0.0) {
      n = n * -1.0;
      offset = -offset;
    }
    if (offset - dot(n, centroid) <= hull_tol) fail(ErrorKind::NonConvexHull, "hull face passes through its centroid");
    planes.push_back({n.x, n.y, n.z, offset});
  }
  if (planes.size() < 4) fail(ErrorKind::NonConvexHull, "hull has fewer than four proper faces");

  const simd::PointsSoA hull_pts{hx, hy, hz};
  std::vector<double> hull_max(hx.size(), -std::numeric_limits<double>::infinity());
  for (const auto& pl : planes) simd::plane_max(hull_pts, pl, hull_max);
  for (double d : hull_max) {
    if (d > hull_tol) fail(ErrorKind::NonConvexHull, "hull vertex lies outside a hull face plane");
  }

  std::vector<double> mx(ref.size()), my(ref.size()), mz(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const Vec3& p = mesh.positions[ref[i]];
    mx[i] = p.x;
    my[i] = p.y;
    mz[i] = p.z;
  }
  const Aabb mesh_box = bbox(mesh);
  const double contain_tol = 1e-6 * mesh_box.diagonal();
  std::vector<double> mesh_max(ref.size(), -std::numeric_limits<double>::infinity());
  const simd::PointsSoA mesh_pts{mx, my, mz};
  for (const auto& pl : planes) simd::plane_max(mesh_pts, pl, mesh_max);
  const auto inside = std::count_if(mesh_max.begin(), mesh_max.end(), [&](double d) { return d <= contain_tol; });

  HullReport r;
  r.hull_triangles = hull.triangles.size();
  r.vertex_containment = 100.0 * static_cast<double>(inside) / static_cast<double>(ref.size());
  if (health(hull).watertight) {
    r.hull_volume = mesh_volume(hull);
  } else {
    std::vector<Vec3> hp;
    hp.reserve(hull_ref.size());
    for (auto i : hull_ref) hp.push_back(hull.positions[i]);
    r.hull_volume = mesh_volume(convex_hull(hp));
  }
  const double box_volume = mesh_box.volume();
  r.volume_coverage = box_volume > 0.0 ? r.hull_volume / box_volume : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace bankaudit::geometry
