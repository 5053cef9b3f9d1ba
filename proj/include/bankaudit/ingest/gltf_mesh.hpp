#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bankaudit/geometry/mesh.hpp"
#include "bankaudit/ingest/glb.hpp"
#include "bankaudit/ingest/image_probe.hpp"

namespace bankaudit::ingest {

struct MaterialProbe {
  std::size_t texture_count = 0;  // entries in the glTF images array
  std::vector<ImageDims> texture_dims;  // embedded images whose header was probed
  bool has_basecolor = false;
  bool has_normal = false;
  bool has_roughness = false;

  // Mean of max(width, height) over probed textures; 0 when there are none.
  double mean_texture_size() const;
};

struct ExtractOptions {
  // Restrict to the subtree of the node with this name.
  std::optional<std::string> only_node;
  // Skip the subtrees of these node names (e.g. an embedded collision hull).
  std::vector<std::string> exclude_nodes;
};

struct ExtractedAsset {
  geometry::MeshGeometry mesh;
  MaterialProbe material;
  std::vector<std::string> warnings;
};

// Decodes POSITION, TEXCOORD_0 and indices of every triangle primitive reachable
// from the default scene, bakes node transforms into vertices and concatenates
// everything into one mesh.
//
// Throws Error(NoMesh | UnsupportedComponentType | CorruptImageHeader | MalformedGltf).
ExtractedAsset extract_geometry(const GlbContainer& c, const ExtractOptions& opts = {});

}  // namespace bankaudit::ingest
