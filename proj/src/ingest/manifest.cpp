#include "bankaudit/ingest/manifest.hpp"

#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_set>

#include "bankaudit/core/error.hpp"
#include "bankaudit/core/io.hpp"

namespace bankaudit::ingest {
namespace {

using nlohmann::json;

std::string where(std::size_t line) { return " (line " + std::to_string(line) + ")"; }

std::string required_string(const json& rec, const char* field, std::size_t line) {
  if (!rec.contains(field) || rec.at(field).is_null()) fail(ErrorKind::MissingField, std::string(field) + where(line));
  if (!rec.at(field).is_string()) fail(ErrorKind::BadConfig, std::string(field) + " must be a string" + where(line));
  auto v = rec.at(field).get<std::string>();
  if (v.empty()) fail(ErrorKind::MissingField, std::string(field) + " is empty" + where(line));
  return v;
}

std::string optional_string(const json& rec, const char* field) {
  return rec.contains(field) && rec.at(field).is_string() ? rec.at(field).get<std::string>() : std::string{};
}

HullRef parse_hull_ref(const std::string& value, const std::filesystem::path& base, const std::filesystem::path& glb) {
  HullRef ref;
  const auto hash = value.find('#');
  const std::string file = value.substr(0, hash);
  ref.file = file.empty() ? glb : base / file;
  if (hash != std::string::npos) ref.node = value.substr(hash + 1);
  return ref;
}

}  // namespace

std::string_view to_string(AnchorType a) noexcept {
  switch (a) {
    case AnchorType::bottom: return "bottom";
    case AnchorType::top: return "top";
    case AnchorType::center: return "center";
  }
  return "bottom";
}

AnchorType parse_anchor_type(std::string_view s) {
  if (s == "bottom") return AnchorType::bottom;
  if (s == "top") return AnchorType::top;
  if (s == "center") return AnchorType::center;
  fail(ErrorKind::BadConfig, "anchor_type must be bottom, top or center, got '" + std::string(s) + "'");
}

std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> out;
  std::unordered_set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(raw);
    } catch (const json::exception& e) {
      fail(ErrorKind::BadConfig, std::string("manifest record does not parse: ") + e.what() + where(line));
    }
    if (!rec.is_object()) fail(ErrorKind::BadConfig, "manifest record must be an object" + where(line));

    ManifestEntry e;
    e.asset_id = required_string(rec, "asset_id", line);
    e.category = required_string(rec, "category", line);
    e.anchor_type = parse_anchor_type(required_string(rec, "anchor_type", line));
    e.glb_path = base_dir / required_string(rec, "glb_path", line);
    e.subcategory = optional_string(rec, "subcategory");
    e.description = optional_string(rec, "description");
    if (auto img = optional_string(rec, "image_path"); !img.empty()) e.image_path = base_dir / img;
    if (auto hull = optional_string(rec, "hull_path"); !hull.empty()) e.hull = parse_hull_ref(hull, base_dir, e.glb_path);
    if (rec.contains("est_dims") && !rec.at("est_dims").is_null()) {
      const auto& d = rec.at("est_dims");
      if (!d.is_array() || d.size() != 3) fail(ErrorKind::BadConfig, "est_dims must be [x, y, z]" + where(line));
      e.est_dims = Vec3{d[0].get<double>(), d[1].get<double>(), d[2].get<double>()};
    }
    if (!seen.insert(e.asset_id).second) fail(ErrorKind::DuplicateId, "asset_id '" + e.asset_id + "'" + where(line));
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file_text(path), path.parent_path());
}

}  // namespace bankaudit::ingest
