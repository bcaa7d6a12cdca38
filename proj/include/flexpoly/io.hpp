#pragma once

// JSON documents exchanged by the CLI and the HTTP service: models with
// their twin/crinkle structure, rigidity and intersection reports, scans.

#include "flexpoly/netexport.hpp"

namespace flexpoly {

inline json rigidity_report_to_json(const RigidityReport& r) {
  json modes = json::array();
  for (const auto& m : r.flex_modes) modes.push_back(std::vector<double>(m.data(), m.data() + m.size()));
  return {{"dof", r.dof_count},
          {"rank", r.matrix_rank},
          {"trivial", r.trivial_motions},
          {"flex_modes", modes},
          {"isostatic", r.is_isostatic}};
}

inline json contact_to_json(const FacePair& p) {
  return {{"faces", {p.f1, p.f2}},
          {"class", to_string(p.classification)},
          {"depth", p.contact.depth},
          {"points", points_to_json(p.contact.points)}};
}

inline json intersection_report_to_json(const IntersectionReport& r) {
  json pairs = json::array(), touching = json::array();
  for (const auto& p : r.pairs) pairs.push_back(contact_to_json(p));
  for (const auto& p : r.touching) touching.push_back(contact_to_json(p));
  return {{"frame", r.frame},
          {"embedded", r.is_embedded()},
          {"eps", r.eps},
          {"worst_depth", r.worst_depth()},
          {"pairs", pairs},
          {"touching", touching}};
}

namespace detail {

inline json edges_to_json(const std::vector<Edge>& es) {
  json a = json::array();
  for (const auto& e : es) a.push_back({e.a, e.b});
  return a;
}

inline std::vector<Edge> edges_from_json(const json& j, int nv) {
  std::vector<Edge> out;
  if (!j.is_array()) throw ValidationError("expected a list of vertex pairs");
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer()) {
      throw ValidationError("vertex pair must be [i, j]");
    }
    const int a = e[0].get<int>(), b = e[1].get<int>();
    if (a < 0 || b < 0 || a >= nv || b >= nv || a == b) throw ValidationError("vertex pair out of range");
    out.emplace_back(a, b);
  }
  return out;
}

inline std::vector<int> indices_from_json(const json& j, int nv, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + " must be a list of vertex indices");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ValidationError(std::string(what) + " must hold integers");
    const int i = v.get<int>();
    if (i < 0 || i >= nv) throw ValidationError(std::string(what) + " index out of range");
    out.push_back(i);
  }
  return out;
}

}  // namespace detail

/// Mesh JSON extended with the model's name, kind, parameters and the
/// structure a twin or crinkle needs for diagnostics and default drivers.
inline json model_to_json(const Model& m, const std::string& name = "", const ParamMap& params = {}) {
  json j = mesh_to_json(model_mesh(m));
  j["kind"] = model_kind(m);
  if (!name.empty()) j["model"] = name;
  if (!params.empty()) j["params"] = params;
  if (const auto* t = std::get_if<Twin>(&m)) {
    j["equator"] = t->equator;
    j["partner"] = t->partner;
    j["symmetry"] = to_string(t->kind);
  } else if (const auto* c = std::get_if<Crinkle>(&m)) {
    j["boundary"] = c->boundary;
    j["phantom_pairs"] = detail::edges_to_json(c->phantom_pairs);
  } else if (const auto* c = std::get_if<Cap>(&m)) {
    j["boundary"] = c->boundary;
  }
  return j;
}

inline Model model_from_json(const json& j) {
  TriMesh mesh = mesh_from_json(j);
  const std::string kind = j.is_object() ? j.value("kind", std::string("mesh")) : "mesh";
  const int nv = mesh.num_vertices();
  try {
    if (kind == "twin") {
      Twin t;
      t.equator = detail::indices_from_json(j.at("equator"), nv, "equator");
      t.partner = detail::indices_from_json(j.at("partner"), nv, "partner");
      t.kind = symmetry_kind_from_string(j.at("symmetry").get<std::string>());
      if (t.equator.size() != 4 || std::ssize(t.partner) != nv) throw ValidationError("twin needs 4 equator vertices and one partner per vertex");
      t.mesh = std::move(mesh);
      return t;
    }
    if (kind == "crinkle") {
      Crinkle c;
      c.boundary = detail::indices_from_json(j.at("boundary"), nv, "boundary");
      c.phantom_pairs = detail::edges_from_json(j.at("phantom_pairs"), nv);
      c.mesh = std::move(mesh);
      return c;
    }
    if (kind == "cap") {
      Cap c;
      c.boundary = detail::indices_from_json(j.at("boundary"), nv, "boundary");
      c.mesh = std::move(mesh);
      return c;
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed ") + kind + " document: " + e.what());
  }
  if (kind != "mesh") throw ValidationError("unknown model kind '" + kind + "'");
  return mesh;
}

inline json scan_to_json(const EmbeddingScan& s) {
  json box = json::object();
  for (const auto& [k, r] : s.box) box[k] = {r.lo, r.hi};
  json samples = json::array();
  for (const auto& x : s.samples) {
    json row{{"index", x.index}, {"params", x.params}, {"built", x.built}};
    if (x.built) {
      row["range"] = {x.range_lo, x.range_hi};
      row["embedded_range"] = x.embedded_range;
      row["embedded_fraction"] = x.embedded_fraction;
      row["worst_depth"] = x.worst_depth;
    } else {
      row["error"] = x.error;
    }
    samples.push_back(row);
  }
  return {{"model", s.model}, {"box", box}, {"seed", s.seed}, {"samples", samples}, {"ranking", s.ranking}};
}

}  // namespace flexpoly
