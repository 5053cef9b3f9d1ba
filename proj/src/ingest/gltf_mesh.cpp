#include "bankaudit/ingest/gltf_mesh.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <functional>
#include <nlohmann/json.hpp>
#include <set>

#include "bankaudit/core/error.hpp"

namespace bankaudit::ingest {
namespace {

using nlohmann::json;
using geometry::MeshGeometry;

constexpr int kFloat = 5126;
constexpr int kUnsignedShort = 5123;
constexpr int kUnsignedInt = 5125;
constexpr int kModeTriangles = 4;

// Column-major 4x4, glTF convention.
using Mat4 = std::array<double, 16>;

constexpr Mat4 kIdentity{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

Mat4 mul(const Mat4& a, const Mat4& b) {
  Mat4 r{};
  for (int c = 0; c < 4; ++c) {
    for (int row = 0; row < 4; ++row) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += a[k * 4 + row] * b[c * 4 + k];
      r[c * 4 + row] = s;
    }
  }
  return r;
}

Vec3 apply(const Mat4& m, Vec3 p) {
  return {m[0] * p.x + m[4] * p.y + m[8] * p.z + m[12], m[1] * p.x + m[5] * p.y + m[9] * p.z + m[13],
          m[2] * p.x + m[6] * p.y + m[10] * p.z + m[14]};
}

double det3(const Mat4& m) {
  return m[0] * (m[5] * m[10] - m[9] * m[6]) - m[4] * (m[1] * m[10] - m[9] * m[2]) + m[8] * (m[1] * m[6] - m[5] * m[2]);
}

Mat4 local_matrix(const json& node) {
  if (node.contains("matrix")) {
    const auto& arr = node.at("matrix");
    if (!arr.is_array() || arr.size() != 16) fail(ErrorKind::MalformedGltf, "node matrix must have 16 numbers");
    Mat4 m{};
    for (int i = 0; i < 16; ++i) m[i] = arr[i].get<double>();
    return m;
  }
  Mat4 t = kIdentity, r = kIdentity, s = kIdentity;
  if (node.contains("translation")) {
    const auto& v = node.at("translation");
    t[12] = v.at(0).get<double>();
    t[13] = v.at(1).get<double>();
    t[14] = v.at(2).get<double>();
  }
  if (node.contains("rotation")) {
    const auto& q = node.at("rotation");
    const double x = q.at(0).get<double>(), y = q.at(1).get<double>(), z = q.at(2).get<double>(), w = q.at(3).get<double>();
    r = {1 - 2 * (y * y + z * z), 2 * (x * y + z * w),     2 * (x * z - y * w),     0,
         2 * (x * y - z * w),     1 - 2 * (x * x + z * z), 2 * (y * z + x * w),     0,
         2 * (x * z + y * w),     2 * (y * z - x * w),     1 - 2 * (x * x + y * y), 0,
         0,                       0,                       0,                       1};
  }
  if (node.contains("scale")) {
    const auto& v = node.at("scale");
    s[0] = v.at(0).get<double>();
    s[5] = v.at(1).get<double>();
    s[10] = v.at(2).get<double>();
  }
  return mul(t, mul(r, s));
}

class Decoder {
 public:
  Decoder(const GlbContainer& c, const json& doc, std::vector<std::string>& warnings)
      : c_(c), doc_(doc), warnings_(warnings) {}

  // Returns a view over accessor element `i` start and the element stride.
  struct View {
    const std::byte* base = nullptr;
    std::size_t stride = 0;
    std::size_t count = 0;
  };

  View accessor_view(std::size_t accessor_index, int want_components, std::span<const int> types) const {
    const auto& accessors = doc_.at("accessors");
    if (accessor_index >= accessors.size()) fail(ErrorKind::MalformedGltf, "accessor index out of range");
    const auto& acc = accessors.at(accessor_index);
    const int ctype = acc.at("componentType").get<int>();
    if (std::find(types.begin(), types.end(), ctype) == types.end()) {
      fail(ErrorKind::UnsupportedComponentType,
           "accessor " + std::to_string(accessor_index) + " has componentType " + std::to_string(ctype));
    }
    if (acc.value("normalized", false)) {
      fail(ErrorKind::UnsupportedComponentType, "normalized accessor " + std::to_string(accessor_index));
    }
    const std::string type = acc.at("type").get<std::string>();
    const int comps = type == "SCALAR" ? 1 : type == "VEC2" ? 2 : type == "VEC3" ? 3 : type == "VEC4" ? 4 : 0;
    if (comps != want_components) fail(ErrorKind::MalformedGltf, "accessor " + std::to_string(accessor_index) + " has type " + type);
    if (acc.contains("sparse")) warnings_.push_back("sparse accessor ignored: " + std::to_string(accessor_index));
    if (!acc.contains("bufferView")) fail(ErrorKind::MalformedGltf, "accessor without bufferView");

    const auto& bv = doc_.at("bufferViews").at(acc.at("bufferView").get<std::size_t>());
    const auto buffer_index = bv.at("buffer").get<std::size_t>();
    const auto& buffer = doc_.at("buffers").at(buffer_index);
    if (buffer.contains("uri") || buffer_index != 0 || !c_.bin_chunk) {
      fail(ErrorKind::MalformedGltf, "only the GLB-embedded buffer is supported");
    }
    const std::size_t elem = static_cast<std::size_t>(comps) * (ctype == kUnsignedShort ? 2 : 4);
    const std::size_t stride = bv.value("byteStride", std::size_t{0}) == 0 ? elem : bv.at("byteStride").get<std::size_t>();
    const std::size_t view_off = bv.value("byteOffset", std::size_t{0});
    const std::size_t view_len = bv.at("byteLength").get<std::size_t>();
    const std::size_t acc_off = acc.value("byteOffset", std::size_t{0});
    const std::size_t count = acc.at("count").get<std::size_t>();
    const auto& bin = *c_.bin_chunk;
    if (view_off + view_len > bin.size()) fail(ErrorKind::MalformedGltf, "bufferView overruns BIN chunk");
    if (count > 0 && acc_off + stride * (count - 1) + elem > view_len) {
      fail(ErrorKind::MalformedGltf, "accessor " + std::to_string(accessor_index) + " overruns its bufferView");
    }
    return {bin.data() + view_off + acc_off, stride, count};
  }

  int component_type(std::size_t accessor_index) const {
    return doc_.at("accessors").at(accessor_index).at("componentType").get<int>();
  }

 private:
  const GlbContainer& c_;
  const json& doc_;
  std::vector<std::string>& warnings_;
};

template <typename T>
T load(const std::byte* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

MeshGeometry decode_primitive(const Decoder& dec, const json& prim, const Mat4& world,
                              std::vector<std::string>& warnings) {
  static constexpr std::array<int, 1> kFloatOnly{kFloat};
  static constexpr std::array<int, 2> kIndexTypes{kUnsignedShort, kUnsignedInt};

  MeshGeometry m;
  const auto& attrs = prim.at("attributes");
  const auto pos = dec.accessor_view(attrs.at("POSITION").get<std::size_t>(), 3, kFloatOnly);
  m.positions.reserve(pos.count);
  for (std::size_t i = 0; i < pos.count; ++i) {
    const std::byte* p = pos.base + i * pos.stride;
    const Vec3 v{load<float>(p), load<float>(p + 4), load<float>(p + 8)};
    m.positions.push_back(apply(world, v));
  }

  if (attrs.contains("TEXCOORD_0")) {
    const auto uv = dec.accessor_view(attrs.at("TEXCOORD_0").get<std::size_t>(), 2, kFloatOnly);
    if (uv.count != pos.count) fail(ErrorKind::MalformedGltf, "TEXCOORD_0 count differs from POSITION");
    m.uvs.reserve(uv.count);
    for (std::size_t i = 0; i < uv.count; ++i) {
      const std::byte* p = uv.base + i * uv.stride;
      m.uvs.push_back({load<float>(p), load<float>(p + 4)});
    }
  }

  std::vector<std::uint32_t> idx;
  if (prim.contains("indices")) {
    const auto acc = prim.at("indices").get<std::size_t>();
    const auto view = dec.accessor_view(acc, 1, kIndexTypes);
    const bool wide = dec.component_type(acc) == kUnsignedInt;
    idx.reserve(view.count);
    for (std::size_t i = 0; i < view.count; ++i) {
      const std::byte* p = view.base + i * view.stride;
      idx.push_back(wide ? load<std::uint32_t>(p) : load<std::uint16_t>(p));
    }
  } else {
    idx.resize(pos.count);
    for (std::uint32_t i = 0; i < idx.size(); ++i) idx[i] = i;
  }
  if (idx.size() % 3 != 0) {
    warnings.push_back("index count not a multiple of 3; trailing indices dropped");
    idx.resize(idx.size() - idx.size() % 3);
  }
  const bool mirrored = det3(world) < 0.0;
  for (std::size_t i = 0; i < idx.size(); i += 3) {
    if (mirrored) {
      m.triangles.push_back({idx[i], idx[i + 2], idx[i + 1]});
    } else {
      m.triangles.push_back({idx[i], idx[i + 1], idx[i + 2]});
    }
  }
  m.validate();
  return m;
}

void note_ignored_features(const json& doc, std::vector<std::string>& warnings) {
  for (const char* key : {"skins", "animations", "extensionsUsed", "cameras"}) {
    if (doc.contains(key) && !doc.at(key).empty()) warnings.push_back(std::string("ignored glTF feature: ") + key);
  }
}

MaterialProbe probe_materials(const GlbContainer& c, const json& doc, std::vector<std::string>& warnings) {
  MaterialProbe probe;
  if (doc.contains("materials")) {
    for (const auto& mat : doc.at("materials")) {
      if (mat.contains("pbrMetallicRoughness")) {
        const auto& pbr = mat.at("pbrMetallicRoughness");
        probe.has_basecolor = probe.has_basecolor || pbr.contains("baseColorTexture");
        probe.has_roughness = probe.has_roughness || pbr.contains("metallicRoughnessTexture");
      }
      probe.has_normal = probe.has_normal || mat.contains("normalTexture");
    }
  }
  if (!doc.contains("images")) return probe;
  const auto& images = doc.at("images");
  probe.texture_count = images.size();
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& img = images.at(i);
    if (!img.contains("bufferView")) {
      warnings.push_back("image " + std::to_string(i) + " is not embedded; size not probed");
      continue;
    }
    const auto& bv = doc.at("bufferViews").at(img.at("bufferView").get<std::size_t>());
    const std::size_t off = bv.value("byteOffset", std::size_t{0});
    const std::size_t len = bv.at("byteLength").get<std::size_t>();
    if (!c.bin_chunk || off + len > c.bin_chunk->size()) {
      fail(ErrorKind::CorruptImageHeader, "image " + std::to_string(i) + " bufferView overruns BIN chunk");
    }
    probe.texture_dims.push_back(probe_image(std::span(*c.bin_chunk).subspan(off, len)));
  }
  return probe;
}

}  // namespace

double MaterialProbe::mean_texture_size() const {
  if (texture_dims.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& d : texture_dims) sum += std::max(d.width, d.height);
  return sum / static_cast<double>(texture_dims.size());
}

ExtractedAsset extract_geometry(const GlbContainer& c, const ExtractOptions& opts) {
  ExtractedAsset out;
  json doc;
  try {
    doc = json::parse(c.json_chunk);
  } catch (const json::exception& e) {
    fail(ErrorKind::MalformedGltf, std::string("JSON chunk does not parse: ") + e.what());
  }

  try {
    note_ignored_features(doc, out.warnings);
    Decoder dec(c, doc, out.warnings);
    const json empty = json::array();
    const auto& meshes = doc.contains("meshes") ? doc.at("meshes") : empty;
    const auto& nodes = doc.contains("nodes") ? doc.at("nodes") : empty;
    std::size_t primitives = 0;

    auto emit_mesh = [&](std::size_t mesh_index, const Mat4& world) {
      if (mesh_index >= meshes.size()) fail(ErrorKind::MalformedGltf, "mesh index out of range");
      for (const auto& prim : meshes.at(mesh_index).value("primitives", json::array())) {
        if (!prim.contains("attributes") || !prim.at("attributes").contains("POSITION")) continue;
        if (prim.value("mode", kModeTriangles) != kModeTriangles) {
          out.warnings.push_back("non-triangle primitive skipped");
          continue;
        }
        if (prim.contains("targets")) out.warnings.push_back("morph targets ignored");
        geometry::append_mesh(out.mesh, decode_primitive(dec, prim, world, out.warnings));
        ++primitives;
      }
    };

    std::set<std::size_t> on_path;
    std::function<void(std::size_t, const Mat4&, bool)> visit = [&](std::size_t ni, const Mat4& parent, bool active) {
      if (ni >= nodes.size()) fail(ErrorKind::MalformedGltf, "node index out of range");
      if (!on_path.insert(ni).second) fail(ErrorKind::MalformedGltf, "cycle in node hierarchy");
      const auto& node = nodes.at(ni);
      const std::string name = node.value("name", std::string{});
      if (std::find(opts.exclude_nodes.begin(), opts.exclude_nodes.end(), name) != opts.exclude_nodes.end()) {
        on_path.erase(ni);
        return;
      }
      const bool now_active = active || (opts.only_node && name == *opts.only_node);
      const Mat4 world = mul(parent, local_matrix(node));
      if (now_active && node.contains("mesh")) emit_mesh(node.at("mesh").get<std::size_t>(), world);
      for (const auto& child : node.value("children", json::array())) visit(child.get<std::size_t>(), world, now_active);
      on_path.erase(ni);
    };

    const bool start_active = !opts.only_node.has_value();
    if (doc.contains("scenes") && !doc.at("scenes").empty()) {
      const auto scene = doc.value("scene", std::size_t{0});
      for (const auto& root : doc.at("scenes").at(scene).value("nodes", json::array())) {
        visit(root.get<std::size_t>(), kIdentity, start_active);
      }
    } else if (!nodes.empty()) {
      std::vector<char> is_child(nodes.size(), 0);
      for (const auto& n : nodes) {
        for (const auto& ch : n.value("children", json::array())) {
          const auto ci = ch.get<std::size_t>();
          if (ci < is_child.size()) is_child[ci] = 1;
        }
      }
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!is_child[i]) visit(i, kIdentity, start_active);
      }
    } else if (start_active) {
      for (std::size_t i = 0; i < meshes.size(); ++i) emit_mesh(i, kIdentity);
    }

    if (primitives == 0) {
      fail(ErrorKind::NoMesh, opts.only_node ? "no mesh primitive under node '" + *opts.only_node + "'"
                                             : std::string("no mesh primitive with POSITION"));
    }
    out.material = probe_materials(c, doc, out.warnings);
  } catch (const json::exception& e) {
    fail(ErrorKind::MalformedGltf, e.what());
  }
  return out;
}

}  // namespace bankaudit::ingest
