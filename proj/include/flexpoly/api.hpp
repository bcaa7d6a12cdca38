#pragma once

// Request -> payload functions shared by the command line and the HTTP
// service, so both emit byte-identical documents for the same input.

#include "flexpoly/io.hpp"

#include <cctype>
#include <charconv>

namespace flexpoly::api {

/// Exit status for the command line and HTTP status for the service.
inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const ValidationError*>(&e)) return 2;
  if (dynamic_cast<const SolverError*>(&e)) return 3;
  return 1;
}

inline int http_status(const std::exception& e) {
  if (dynamic_cast<const NotFoundError*>(&e)) return 404;
  if (dynamic_cast<const ValidationError*>(&e)) return 400;
  if (dynamic_cast<const SolverError*>(&e)) return 422;
  return 500;
}

inline std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const NotFoundError*>(&e)) return "not_found";
  if (dynamic_cast<const ValidationError*>(&e)) return "validation";
  if (dynamic_cast<const SolverError*>(&e)) return "solver";
  return "internal";
}

inline json error_payload(const std::exception& e) {
  return {{"error", {{"kind", error_kind(e)}, {"status", http_status(e)}, {"message", e.what()}}}};
}

/// The one serialization used for every JSON payload.
inline std::string serialize(const json& j) { return j.dump() + "\n"; }

inline json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Request parsing helpers

namespace detail {

inline double parse_number(const std::string& s, const std::string& what) {
  double v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) throw ValidationError(what + ": '" + s + "' is not a number");
  return v;
}

inline std::string trim(std::string s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t k = 0;
  while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
  return s.substr(k);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) out.push_back(trim(cur)), cur.clear();
    else cur += c;
  }
  out.push_back(trim(cur));
  return out;
}

/// A vertex named by label or by index.
inline std::optional<int> vertex_ref(const TriMesh& m, const std::string& s) {
  if (auto v = m.find_label(s)) return v;
  if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    const int i = std::stoi(s);
    if (i < m.num_vertices()) return i;
  }
  return std::nullopt;
}

inline int require_vertex(const TriMesh& m, const std::string& s) {
  if (auto v = vertex_ref(m, s)) return *v;
  throw ValidationError("unknown vertex '" + s + "'");
}

/// "A,A'", "A-A'", "AA'" (split at the unique label boundary) or
/// "dihedral:a,b,c,d".
inline DriverSpec parse_driver_string(const TriMesh& m, std::string s) {
  s = trim(s);
  if (s.rfind("dihedral:", 0) == 0) {
    const auto parts = split(s.substr(9), ',');
    if (parts.size() != 4) throw ValidationError("dihedral driver needs four vertices");
    return DihedralDriver{require_vertex(m, parts[0]), require_vertex(m, parts[1]), require_vertex(m, parts[2]),
                          require_vertex(m, parts[3])};
  }
  if (s.rfind("distance:", 0) == 0) s = s.substr(9);
  for (char sep : {',', '-'}) {
    if (s.find(sep) != std::string::npos) {
      const auto parts = split(s, sep);
      if (parts.size() == 2) return DistanceDriver{require_vertex(m, parts[0]), require_vertex(m, parts[1])};
    }
  }
  std::vector<DistanceDriver> found;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const auto a = m.find_label(s.substr(0, k)), b = m.find_label(s.substr(k));
    if (a && b) found.push_back({*a, *b});
  }
  if (found.size() == 1) return found.front();
  if (found.size() > 1) throw ValidationError("driver '" + s + "' is ambiguous; separate the vertices with a comma");
  throw ValidationError("cannot parse driver '" + s + "'");
}

inline DriverSpec parse_driver(const TriMesh& m, const json& j) {
  DriverSpec d;
  if (j.is_string()) d = parse_driver_string(m, j.get<std::string>());
  else d = driver_from_json(j);
  for (int v : driver_vertices(d)) {
    if (v < 0 || v >= m.num_vertices()) throw ValidationError("driver refers to a missing vertex");
  }
  if (const auto* p = std::get_if<DistanceDriver>(&d); p && p->i == p->j) throw ValidationError("driver endpoints must differ");
  return d;
}

inline int get_int(const json& req, const char* key, int fallback, int lo, int hi) {
  if (!req.contains(key)) return fallback;
  const auto& v = req.at(key);
  if (!v.is_number_integer()) throw ValidationError(std::string("'") + key + "' must be an integer");
  const int x = v.get<int>();
  if (x < lo || x > hi) {
    throw ValidationError(std::string("'") + key + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return x;
}

inline const json& require_object(const json& req) {
  if (!req.is_object()) throw ValidationError("request body must be a JSON object");
  return req;
}

}  // namespace detail

/// Parses "k=v" parameter assignments.
inline ParamMap parse_params(const std::vector<std::string>& assignments) {
  ParamMap out;
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw ValidationError("parameter '" + a + "' must look like name=value");
    const std::string name = detail::trim(a.substr(0, eq));
    out[name] = detail::parse_number(detail::trim(a.substr(eq + 1)), "parameter " + name);
  }
  return out;
}

/// "name=lo:hi,name=lo:hi".
inline ParamBox parse_box(const std::string& spec) {
  ParamBox box;
  for (const auto& item : detail::split(spec, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    const auto colon = item.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos) throw ValidationError("box entry '" + item + "' must look like name=lo:hi");
    const std::string name = detail::trim(item.substr(0, eq));
    box[name] = {detail::parse_number(detail::trim(item.substr(eq + 1, colon - eq - 1)), "box " + name),
                 detail::parse_number(detail::trim(item.substr(colon + 1)), "box " + name)};
  }
  if (box.empty()) throw ValidationError("box is empty");
  return box;
}

inline ParamMap params_from_json(const json& j) {
  ParamMap p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw ValidationError("'params' must be an object");
  for (const auto& [k, v] : j.items()) {
    if (!v.is_number()) throw ValidationError("parameter '" + k + "' must be a number");
    p[k] = v.get<double>();
  }
  return p;
}

// ---------------------------------------------------------------------------
// Operations

inline json models() {
  json out = json::array();
  for (const auto& m : catalog_models()) {
    json params = json::array();
    for (const auto& p : m.params) {
      params.push_back({{"name", p.name}, {"default", p.default_value}, {"min", p.min}, {"max", p.max}, {"doc", p.doc}});
    }
    out.push_back({{"name", m.name}, {"kind", m.kind}, {"description", m.description}, {"params", params}});
  }
  return {{"models", out}};
}

/// {"model": name, "params": {...}} -> model document.
inline json build(const json& req) {
  detail::require_object(req);
  if (!req.contains("model") || !req["model"].is_string()) throw ValidationError("'model' must name a catalog model");
  const std::string name = req["model"].get<std::string>();
  const auto& spec = model_spec(name);
  const auto params = resolve_params(spec, params_from_json(req.value("params", json())));
  return model_to_json(spec.build(params), name, params);
}

/// A validated flex request, ready to trace.
struct FlexPlan {
  Model model;
  FlexProblem problem;
  std::optional<std::pair<double, double>> range;  // none: full motion range
  int frames = 100;
};

inline FlexPlan plan_flex(const json& req) {
  detail::require_object(req);
  if (!req.contains("mesh")) throw ValidationError("flex request needs 'mesh'");
  FlexPlan plan{model_from_json(req["mesh"]), {}, std::nullopt, detail::get_int(req, "frames", 100, 1, 100000)};
  const TriMesh& mesh = model_mesh(plan.model);

  const json driver = req.value("driver", json("auto"));
  DriverSetup setup;
  if (driver.is_string() && driver.get<std::string>() == "auto") {
    const auto& doc = req["mesh"];
    const std::string name = doc.value("model", std::string());
    const bool known = std::any_of(catalog_models().begin(), catalog_models().end(), [&](const ModelSpec& s) { return s.name == name; });
    setup = known ? model_drivers(name, plan.model) : default_driver(plan.model);
  } else if (driver.is_array()) {
    for (const auto& d : driver) setup.drivers.push_back(detail::parse_driver(mesh, d));
  } else {
    setup.drivers.push_back(detail::parse_driver(mesh, driver));
  }
  if (setup.drivers.empty()) throw ValidationError("no driver given");
  if (req.contains("pinned")) {
    setup.pinned.clear();
    for (const auto& e : req["pinned"]) {
      if (e.is_string()) {
        const auto d = detail::parse_driver(mesh, e);
        const auto* p = std::get_if<DistanceDriver>(&d);
        if (!p) throw ValidationError("pinned pairs must be vertex pairs");
        setup.pinned.emplace_back(p->i, p->j);
      } else {
        const auto es = flexpoly::detail::edges_from_json(json::array({e}), mesh.num_vertices());
        setup.pinned.push_back(es.front());
      }
    }
  }

  const json range = req.value("range", json("auto"));
  if (range.is_string()) {
    const std::string r = range.get<std::string>();
    if (r != "auto") {
      const auto colon = r.find(':');
      if (colon == std::string::npos) throw ValidationError("range must be 'auto' or 'a:b'");
      plan.range = std::pair{detail::parse_number(detail::trim(r.substr(0, colon)), "range"),
                             detail::parse_number(detail::trim(r.substr(colon + 1)), "range")};
    }
  } else if (range.is_array() && range.size() == 2 && range[0].is_number() && range[1].is_number()) {
    plan.range = std::pair{range[0].get<double>(), range[1].get<double>()};
  } else {
    throw ValidationError("range must be 'auto', 'a:b' or [a, b]");
  }
  plan.problem = make_problem(plan.model, setup.drivers, setup.pinned);
  require_determined(plan.problem, mesh.vertices());
  return plan;
}

inline json run_flex(const FlexPlan& plan) {
  const TriMesh& mesh = model_mesh(plan.model);
  FlexPath path;
  if (plan.range) {
    auto held = current_driver_values(plan.problem, mesh.vertices());
    held.erase(held.begin());
    path = trace(plan.problem, mesh.vertices(), linear_schedule(plan.range->first, plan.range->second, plan.frames, held));
  } else {
    path = trace_full_range(plan.problem, mesh.vertices(), plan.frames);
  }
  return path_to_json(path, &mesh);
}

/// {"mesh": doc, "driver": spec|"auto", "range": "auto"|"a:b", "frames": n} -> frames document.
inline json flex(const json& req) { return run_flex(plan_flex(req)); }

namespace detail {

inline json mesh_check(const Model& model, int frame_index) {
  const TriMesh& mesh = model_mesh(model);
  const auto st = mesh_stats(mesh);
  const auto rep = analyze(Framework::from_mesh(mesh));
  const auto inter = self_intersections(mesh, mesh.vertices(), {}, frame_index);
  json out{{"kind", model_kind(model)},
           {"stats", {{"vertices", st.V}, {"edges", st.E}, {"faces", st.F}, {"euler", st.euler_characteristic},
                      {"closed", mesh.is_closed()}}},
           {"rigidity", rigidity_report_to_json(rep)},
           {"flexible", !rep.flex_modes.empty()},
           {"intersections", intersection_report_to_json(inter)},
           {"embedded", inter.is_embedded()},
           {"volume", mesh.is_closed() ? json(signed_volume(mesh)) : json(nullptr)}};
  if (const auto* t = std::get_if<Twin>(&model)) out["sym_residual"] = equator_residual(mesh.vertices(), *t);
  return out;
}

}  // namespace detail

/// {"mesh": doc} or {"path": frames document, "frame": i} -> report. A bare
/// mesh or frames document is accepted too.
inline json check(const json& req) {
  detail::require_object(req);
  const bool is_path = req.contains("path") || req.contains("frames");
  if (!is_path) {
    const json& doc = req.contains("mesh") ? req["mesh"] : req;
    return detail::mesh_check(model_from_json(doc), 0);
  }
  const json& doc = req.contains("path") ? req["path"] : req;
  const auto path = path_from_json(doc);
  if (path.frames.empty()) throw ValidationError("path has no frames");
  const int frame = detail::get_int(req, "frame", 0, 0, int(path.frames.size()) - 1);
  const TriMesh base = path_mesh(doc, 0);
  json out = detail::mesh_check(base.with_vertices(path.frames[std::size_t(frame)].vertices), frame);
  out["frame"] = frame;
  double edge_err = 0, vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
  int embedded = 0;
  json per = json::array();
  for (std::size_t k = 0; k < path.frames.size(); ++k) {
    const auto& f = path.frames[k];
    if (std::ssize(f.vertices) != base.num_vertices()) throw ValidationError("frame " + std::to_string(k) + " has the wrong vertex count");
    const auto r = self_intersections(base, f.vertices, {}, int(k));
    embedded += r.is_embedded();
    edge_err = std::max(edge_err, f.diag.edge_err);
    if (std::isfinite(f.diag.volume)) vmin = std::min(vmin, f.diag.volume), vmax = std::max(vmax, f.diag.volume);
    per.push_back({{"t", f.t()}, {"embedded", r.is_embedded()}, {"pairs", r.pairs.size()}, {"worst_depth", r.worst_depth()}});
  }
  out["path"] = {{"frames", path.frames.size()},
                 {"status", path.status == PathStatus::Complete ? "complete" : "locked"},
                 {"max_edge_err", edge_err},
                 {"volume_range", std::isfinite(vmin) ? json({vmin, vmax}) : json(nullptr)},
                 {"embedded_frames", embedded},
                 {"per_frame", per}};
  return out;
}

/// {"mesh": doc} or {"path": doc, "frame": i}, plus optional "root" and
/// "scale" (mm per model unit) -> SVG text.
inline std::string net(const json& req) {
  detail::require_object(req);
  TriMesh mesh;
  if (req.contains("path") || req.contains("frames")) {
    const json& doc = req.contains("path") ? req["path"] : req;
    const int n = doc.contains("frames") && doc["frames"].is_array() ? int(doc["frames"].size()) : 0;
    if (n == 0) throw ValidationError("path has no frames");
    mesh = path_mesh(doc, detail::get_int(req, "frame", 0, 0, n - 1));
  } else {
    mesh = model_mesh(model_from_json(req.contains("mesh") ? req["mesh"] : req));
  }
  UnfoldOptions uo;
  if (req.contains("root")) uo.root = detail::get_int(req, "root", 0, 0, mesh.num_faces() - 1);
  SvgOptions so;
  if (req.contains("scale")) {
    if (!req["scale"].is_number() || !(req["scale"].get<double>() > 0)) throw ValidationError("'scale' must be a positive number");
    so.mm_per_unit = req["scale"].get<double>();
  }
  return export_svg(unfold(mesh, uo), mesh, so);
}

/// {"model", "box": {name: [lo, hi]}, "budget", "seed", "frames"} -> scan table.
inline json search(const json& req) {
  detail::require_object(req);
  if (!req.contains("model") || !req["model"].is_string()) throw ValidationError("'model' must name a catalog model");
  ParamBox box;
  const json b = req.value("box", json::object());
  if (b.is_string()) {
    box = parse_box(b.get<std::string>());
  } else if (b.is_object()) {
    for (const auto& [k, v] : b.items()) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) throw ValidationError("box entries must be [lo, hi]");
      box[k] = {v[0].get<double>(), v[1].get<double>()};
    }
  } else {
    throw ValidationError("'box' must be an object or 'name=lo:hi,...'");
  }
  SearchOptions opt;
  opt.budget = detail::get_int(req, "budget", opt.budget, 1, 100000);
  opt.frames = detail::get_int(req, "frames", opt.frames, 2, 100000);
  if (req.contains("seed")) {
    const auto& seed = req["seed"];
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
      throw ValidationError("'seed' must be a non-negative integer");
    }
    opt.seed = seed.get<std::uint64_t>();
  }
  return scan_to_json(search_embedding(req["model"].get<std::string>(), box, opt));
}

}  // namespace flexpoly::api
