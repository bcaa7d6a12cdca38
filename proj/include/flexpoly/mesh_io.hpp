#pragma once

// Mesh serialization: the JSON schema used by the CLI/HTTP layer and
// Wavefront OBJ (v/f records, 1-based) for interoperability.

#include "flexpoly/mesh.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace flexpoly {

using json = nlohmann::json;

inline json points_to_json(std::span<const Vec3> pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back({p.x(), p.y(), p.z()});
  return arr;
}

inline std::vector<Vec3> points_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("expected an array of [x,y,z] points");
  std::vector<Vec3> pts;
  pts.reserve(j.size());
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 3) throw ValidationError("point must be an [x,y,z] array");
    for (const auto& c : p) {
      if (!c.is_number()) throw ValidationError("point coordinate must be a number");
    }
    pts.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  return pts;
}

inline json mesh_to_json(const TriMesh& m) {
  json faces = json::array();
  for (const auto& f : m.faces()) faces.push_back({f[0], f[1], f[2]});
  json labels = json::object();
  for (const auto& [name, idx] : m.labels()) labels[name] = idx;
  return {{"vertices", points_to_json(m.vertices())}, {"faces", faces}, {"labels", labels}};
}

inline TriMesh mesh_from_json(const json& j) {
  if (!j.is_object() || !j.contains("vertices") || !j.contains("faces")) {
    throw ValidationError("mesh JSON needs 'vertices' and 'faces'");
  }
  auto verts = points_from_json(j.at("vertices"));
  std::vector<Face> faces;
  for (const auto& f : j.at("faces")) {
    if (!f.is_array() || f.size() != 3) throw ValidationError("face must be an [i,j,k] array");
    for (const auto& c : f) {
      if (!c.is_number_integer()) throw ValidationError("face index must be an integer");
    }
    faces.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<int>()});
  }
  std::map<std::string, int> labels;
  if (j.contains("labels")) {
    for (const auto& [name, idx] : j.at("labels").items()) {
      if (!idx.is_number_integer()) throw ValidationError("label index must be an integer");
      labels[name] = idx.get<int>();
    }
  }
  return TriMesh(std::move(verts), std::move(faces), std::move(labels));
}

inline void write_obj(std::ostream& os, const TriMesh& m) {
  os.precision(17);
  for (const auto& [name, idx] : m.labels()) os << "# label " << name << ' ' << idx + 1 << '\n';
  for (const auto& p : m.vertices()) os << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  for (const auto& f : m.faces()) os << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

/// Reads `v` and `f` records; `f` entries may carry `/vt/vn` suffixes and
/// polygons are fan-triangulated. Labels round-trip through `# label` comments.
inline TriMesh read_obj(std::istream& is) {
  std::vector<Vec3> verts;
  std::vector<Face> faces;
  std::map<std::string, int> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw ValidationError("OBJ line " + std::to_string(lineno) + ": bad vertex");
      verts.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const int i = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(i > 0 ? i - 1 : int(verts.size()) + i);
      }
      if (idx.size() < 3) throw ValidationError("OBJ line " + std::to_string(lineno) + ": face needs 3 indices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) faces.push_back({idx[0], idx[k], idx[k + 1]});
    } else if (tag == "#") {
      std::string kw, name;
      int i;
      if (ls >> kw >> name >> i && kw == "label") labels[name] = i - 1;
    }
  }
  return TriMesh(std::move(verts), std::move(faces), std::move(labels));
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace flexpoly
