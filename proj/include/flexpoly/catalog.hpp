#pragma once

// Named, parameterized models. Twins are built the long way: a closed seed
// polyhedron, the symmetric quad on its diagonal, the cap, the twin.

#include "flexpoly/flexion.hpp"
#include "flexpoly/surgery.hpp"

#include <functional>
#include <sstream>

namespace flexpoly {

/// Unknown model or other missing resource.
class NotFoundError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

using ParamMap = std::map<std::string, double>;

struct ParamSpec {
  std::string name;
  double default_value = 0;
  double min = 0;
  double max = 0;
  std::string doc;
};

struct ModelSpec {
  std::string name;
  std::string kind;  // mesh | cap | crinkle | twin
  std::string description;
  std::vector<ParamSpec> params;
  std::function<Model(const ParamMap&)> build;
  std::function<DriverSetup(const Model&)> drivers;  // empty: default_driver
};

namespace detail {

inline std::optional<int> find_face(const TriMesh& m, int a, int b, int c) {
  for (int fi = 0; fi < m.num_faces(); ++fi) {
    const auto& f = m.faces()[std::size_t(fi)];
    std::array<int, 3> s{f[0], f[1], f[2]}, t{a, b, c};
    std::sort(s.begin(), s.end());
    std::sort(t.begin(), t.end());
    if (s == t) return fi;
  }
  return std::nullopt;
}

/// Faces over the loop v0 v1 v2 v3 split by v0-v2, oriented so the hole of
/// the cap runs v0 -> v1 -> v2 -> v3.
inline std::vector<Face> split_quad(const std::array<int, 4>& v) { return {{v[0], v[1], v[2]}, {v[2], v[3], v[0]}}; }

inline TriMesh oriented_outward(TriMesh m) {
  return signed_volume(m) < 0 ? reversed(m) : m;
}

inline SymmetricQuad quad_on_edge(const TriMesh& m, int a, int a_prime) {
  const auto f1 = m.face_with_directed_edge(a_prime, a);
  const auto f2 = m.face_with_directed_edge(a, a_prime);
  if (!f1 || !f2) throw ValidationError("quad_on_edge: not an interior edge");
  auto third = [&](int fi) {
    for (int v : m.faces()[std::size_t(fi)]) {
      if (v != a && v != a_prime) return v;
    }
    return -1;
  };
  SymmetricQuad q{a, third(*f1), a_prime, third(*f2)};
  const auto pts = quad_points(m.vertices(), q.loop());
  q.type_one = satisfies_type_one(pts);
  q.type_two = satisfies_type_two(pts);
  return q;
}

inline Twin twin_of_seed(const TriMesh& seed, int a, int a_prime, SymmetryKind kind) {
  const auto q = quad_on_edge(seed, a, a_prime);
  if (!q.is(kind)) throw ValidationError("seed diagonal does not carry a symmetric quad of the requested type");
  return twin(make_cap(seed, q), kind);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Seeds

/// Quadrilateral pyramid over A, B, A', B' with apex C, base split by AA'.
inline TriMesh pyramid_seed(const Vec3& a, const Vec3& b, const Vec3& a_prime, const Vec3& b_prime, const Vec3& apex,
                            const std::string& apex_label = "C") {
  std::vector<Face> faces = detail::split_quad({0, 1, 2, 3});
  for (const auto& f : std::vector<Face>{{1, 0, 4}, {2, 1, 4}, {3, 2, 4}, {0, 3, 4}}) faces.push_back(f);
  TriMesh m({a, b, a_prime, b_prime, apex}, faces, {{"A", 0}, {"B", 1}, {"A'", 2}, {"B'", 3}, {apex_label, 4}});
  return detail::oriented_outward(m);
}

/// Digonal anticupola over A1..A4 (skew s lifts A2, A4 and lowers A1, A3)
/// with peaks C1 over A1 A2 A3 and C2 over A3 A4 A1, base split by A1 A3.
inline TriMesh anticupola_seed(double s, const Vec3& c1, const Vec3& c2) {
  const std::vector<Vec3> v{{0, -s, -1}, {-1, s, 0}, {0, -s, 1}, {1, s, 0}, c1, c2};
  std::vector<Face> faces = detail::split_quad({0, 1, 2, 3});
  for (const auto& f : std::vector<Face>{{1, 0, 4}, {2, 1, 4}, {3, 2, 5}, {0, 3, 5}, {2, 4, 5}, {0, 5, 4}}) {
    faces.push_back(f);
  }
  TriMesh m(v, faces, {{"A1", 0}, {"A2", 1}, {"A3", 2}, {"A4", 3}, {"C1", 4}, {"C2", 5}});
  return detail::oriented_outward(m);
}

inline TriMesh octahedron(double r = 1.0) {
  const std::vector<Vec3> v{{r, 0, 0}, {-r, 0, 0}, {0, r, 0}, {0, -r, 0}, {0, 0, r}, {0, 0, -r}};
  const std::vector<Face> f{{0, 2, 4}, {2, 1, 4}, {1, 3, 4}, {3, 0, 4}, {2, 0, 5}, {1, 2, 5}, {3, 1, 5}, {0, 3, 5}};
  return TriMesh(v, f);
}

inline TriMesh cube(double side = 1.0) {
  std::vector<Vec3> v;
  for (int k = 0; k < 8; ++k) v.emplace_back(side * (k & 1), side * ((k >> 1) & 1), side * ((k >> 2) & 1));
  // hull of a cube has coplanar quadruples, so triangulate by hand
  const std::vector<Face> f{{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                            {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return TriMesh(v, f);
}

// ---------------------------------------------------------------------------
// Models

inline Twin bricard1(const ParamMap& p) {
  const double az = p.at("a_z"), bx = p.at("b_x"), bz = p.at("b_z");
  const Vec3 c(p.at("c_x"), p.at("c_y"), p.at("c_z"));
  // equator in y = 0, symmetric under the half-turn about the y axis
  const auto seed = pyramid_seed({-1, 0, az}, {bx, 0, bz}, {1, 0, -az}, {-bx, 0, -bz}, c);
  return detail::twin_of_seed(seed, 0, 2, SymmetryKind::TypeI);
}

inline Twin bricard2(const ParamMap& p) {
  const Vec3 b(p.at("b_x"), p.at("b_y"), p.at("b_z"));
  const Vec3 e(p.at("e_x"), p.at("e_y"), p.at("e_z"));
  // kite symmetric under reflection in z = 0
  const auto seed = pyramid_seed({2, 0, 0}, b, {-2, 0, 0}, {b.x(), b.y(), -b.z()}, e, "E");
  return detail::twin_of_seed(seed, 0, 2, SymmetryKind::TypeII);
}

inline Twin anticupola_twin(const ParamMap& p) {
  const auto seed = anticupola_seed(p.at("skew"), {p.at("c1_x"), p.at("c1_y"), p.at("c1_z")},
                                    {p.at("c2_x"), p.at("c2_y"), p.at("c2_z")});
  return detail::twin_of_seed(seed, 0, 2, SymmetryKind::TypeI);
}

inline int label_index(const TriMesh& m, const std::string& name) {
  const auto v = m.find_label(name);
  if (!v) throw ValidationError("model has no vertex labelled '" + name + "'");
  return *v;
}

/// Bricard I twin with the faces on edge A C' removed.
inline Crinkle bricard_crinkle(const ParamMap& p) {
  const auto t = bricard1(p);
  return make_crinkle(t, {Edge(label_index(t.mesh, "A"), label_index(t.mesh, "C'"))});
}

/// Twinned anticupola without edges C1 A1 and C2 A1. At the twin's own
/// shape both phantom distances are frozen by the twin's flex, so the
/// crinkle is first moved along its second degree of freedom: |C1 A1| is
/// stretched by the factor 1 + phantom_offset.
inline Crinkle pentagonal_crinkle(const ParamMap& p) {
  const auto t = anticupola_twin(p);
  const auto& m = t.mesh;
  const int a1 = label_index(m, "A1");
  const int c1 = label_index(m, "C1");
  auto c = make_crinkle(t, {Edge(c1, a1), Edge(label_index(m, "C2"), a1)});
  const double off = p.at("phantom_offset");
  if (off == 0.0) return c;
  const auto prob = make_problem(c.mesh, {DistanceDriver{c1, a1}});
  const double target = (1.0 + off) * (m.vertex(c1) - m.vertex(a1)).norm();
  const std::vector<double> tv{target};
  const auto res = try_solve_frame(prob, tv, c.mesh.vertices());
  if (!res) throw DegenerateError("pentagonal_crinkle: cannot move off the twin shape by phantom_offset");
  c.mesh = c.mesh.with_vertices(res->coords);
  return c;
}

/// Star dodecahedron without the rotated copy of its peak edge.
inline Crinkle new_crinkle(const ParamMap& p) {
  const auto t = anticupola_twin(p);
  return make_crinkle(t, {Edge(label_index(t.mesh, "C1'"), label_index(t.mesh, "C2'"))});
}

/// The three anticupola faces around A1 that the pentagonal crinkle drops,
/// each erected into a tent: a chain of three tetrahedral caps hinged on
/// A1 C1 and A1 C2, bounded by the crinkle's pentagon.
inline Cap tetrahedral_chain(const ParamMap& p) {
  const auto t = anticupola_twin(p);
  const auto& m = t.mesh;
  const int a1 = label_index(m, "A1"), a2 = label_index(m, "A2"), a4 = label_index(m, "A4");
  const int c1 = label_index(m, "C1"), c2 = label_index(m, "C2");
  std::vector<Face> faces;
  for (const auto& tri : std::vector<std::array<int, 3>>{{a2, a1, c1}, {a1, c2, c1}, {a1, a4, c2}}) {
    faces.push_back(m.faces()[std::size_t(*detail::find_face(m, tri[0], tri[1], tri[2]))]);
  }
  TriMesh chain(m.vertices(), faces, m.labels());
  const std::array<double, 3> h{p.at("h1"), p.at("h2"), p.at("h3")};
  const std::array<std::string, 3> apex{"T1", "T2", "T3"};
  const std::vector<std::array<int, 3>> tris{{a2, a1, c1}, {a1, c2, c1}, {a1, a4, c2}};
  auto labels = chain.labels();
  for (std::size_t k = 0; k < 3; ++k) {
    const auto fi = detail::find_face(chain, tris[k][0], tris[k][1], tris[k][2]);
    chain = erect_tent(chain, *fi, h[k]);
    labels[apex[k]] = chain.num_vertices() - 1;
  }
  std::vector<int> old_to_new;
  TriMesh compacted = detail::compact(TriMesh(chain.vertices(), chain.faces(), labels), &old_to_new);
  const auto loops = compacted.boundary_loops();
  if (loops.size() != 1) throw DegenerateError("tetrahedral_chain: expected one boundary loop");
  return Cap{compacted, loops.front()};
}

/// Twinned anticupola with tents on the three faces around A1 and both
/// tetrahedron hinges (A1 C1, A1 C2) swapped for Bricard crinkle pairs.
inline TriMesh foxtrot_template(const ParamMap& p) {
  const auto t = anticupola_twin(p);
  TriMesh m = t.mesh;
  const int a1 = label_index(m, "A1"), a2 = label_index(m, "A2"), a4 = label_index(m, "A4");
  const int c1 = label_index(m, "C1"), c2 = label_index(m, "C2");
  const std::vector<std::array<int, 3>> tris{{a2, a1, c1}, {a1, c2, c1}, {a1, a4, c2}};
  const std::array<double, 3> h{p.at("h1"), p.at("h2"), p.at("h3")};
  const std::array<std::string, 3> apex{"T1", "T2", "T3"};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto fi = detail::find_face(m, tris[k][0], tris[k][1], tris[k][2]);
    auto labels = m.labels();
    m = erect_tent(m, *fi, h[k]);
    labels[apex[k]] = m.num_vertices() - 1;
    m = TriMesh(m.vertices(), m.faces(), labels);
  }
  HingeCrinkleParams h1;
  h1.tip_height = p.at("tip_height");
  h1.theta1 = p.at("theta");
  h1.label_prefix = "k1_";
  m = replace_hinge_with_crinkles(m, Edge(a1, c1), h1).mesh;
  HingeCrinkleParams h2 = h1;
  h2.label_prefix = "k2_";
  m = replace_hinge_with_crinkles(m, Edge(a1, c2), h2).mesh;
  return detail::oriented_outward(m);
}

/// The anticupola diagonal A1 A3 is swept. Each crinkle pair adds a flex
/// that moves only its own flap, so the flap tips are held by their
/// dihedral angle over the former hinge.
inline DriverSetup foxtrot_drivers(const Model& model) {
  const auto& m = model_mesh(model);
  auto at = [&](const char* n) { return label_index(m, n); };
  return {{DistanceDriver{at("A1"), at("A3")}, DihedralDriver{at("T1"), at("A1"), at("C1"), at("k1_tip")},
           DihedralDriver{at("T2"), at("A1"), at("C2"), at("k2_tip")}},
          {}};
}

/// Steffen-style assembly: tetrahedron P Q S T whose hinge P Q is swapped for
/// two mirror-image Bricard crinkles (9 vertices, 14 faces, 21 edges).
inline TriMesh steffen_template(const ParamMap& p) {
  const double d = p.at("depth"), w = p.at("spread"), x = p.at("shift");
  const std::vector<Vec3> v{{-0.5, 0, 0}, {0.5, 0, 0}, {x, -d, w}, {x, -d, -w}};
  TriMesh tet = convex_hull(v);
  tet = TriMesh(tet.vertices(), tet.faces(), {{"P", 0}, {"Q", 1}, {"S", 2}, {"T", 3}});
  HingeCrinkleParams hp;
  hp.tip_height = p.at("tip_height");
  hp.tip_along = p.at("tip_along");
  hp.theta1 = p.at("theta");
  hp.label_prefix = "";
  return detail::oriented_outward(replace_hinge_with_crinkles(tet, Edge(0, 1), hp).mesh);
}

inline TriMesh random_hull_model(const ParamMap& p) {
  const double n = p.at("points"), seed = p.at("seed");
  if (n != std::floor(n) || seed != std::floor(seed)) throw ValidationError("points and seed must be integers");
  return convex_hull(random_sphere_points(int(n), std::uint64_t(seed)));
}

// ---------------------------------------------------------------------------
// Registry

namespace detail {

inline std::vector<ParamSpec> anticupola_params(double s, Vec3 c1, Vec3 c2) {
  return {{"skew", s, -0.5, 0.5, "A2, A4 raised and A1, A3 lowered by this much"},
          {"c1_x", c1.x(), -3, 3, "first peak (over A1 A2 A3)"},
          {"c1_y", c1.y(), -3, 3, ""},
          {"c1_z", c1.z(), -3, 3, ""},
          {"c2_x", c2.x(), -3, 3, "second peak (over A3 A4 A1)"},
          {"c2_y", c2.y(), -3, 3, ""},
          {"c2_z", c2.z(), -3, 3, ""}};
}

inline std::vector<ParamSpec> with(std::vector<ParamSpec> a, const std::vector<ParamSpec>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline std::vector<ModelSpec> build_registry() {
  const std::vector<ParamSpec> bricard1_params{
      {"a_z", 0.6, -2, 2, "A = (-1, 0, a_z), A' = (1, 0, -a_z)"},
      {"b_x", -0.8, -2, 2, "B = (b_x, 0, b_z), B' = (-b_x, 0, -b_z)"},
      {"b_z", -1.0, -2, 2, ""},
      {"c_x", -0.7, -3, 3, "apex C"},
      {"c_y", 1.2, 0.05, 3, ""},
      {"c_z", 0.2, -3, 3, ""}};
  const auto anticupola_shape = anticupola_params(0.0, {-0.3, 1.1, 0.5}, {0.3, 1.0, 0.5});
  const auto star = anticupola_params(0.15, {-0.85, 1.1, 0.05}, {0.85, -1.2, -0.15});
  const auto crinkle_base = anticupola_params(0.0, {0.25, 0.7, -0.4}, {0.15, 0.7, 0.4});
  const std::vector<ParamSpec> tents{{"h1", 0.6, 0.01, 3, "tent height on A2 A1 C1"},
                                     {"h2", 0.6, 0.01, 3, "tent height on A1 C2 C1"},
                                     {"h3", 0.6, 0.01, 3, "tent height on A1 A4 C2"}};
  const std::vector<ParamSpec> crinkle_shape{{"tip_height", 0.6, 0.05, 3, "flap tip distance from the hinge, in hinge lengths"},
                                             {"theta", 0.4, -3.14, 3.14, "crinkle half-turn axis angle"}};

  std::vector<ModelSpec> r;
  r.push_back({"octahedron", "mesh", "regular octahedron (convex, rigid)", {{"radius", 1.0, 0.01, 100, ""}},
               [](const ParamMap& p) { return Model(octahedron(p.at("radius"))); }});
  r.push_back({"cube", "mesh", "triangulated cube (embedded)", {{"side", 1.0, 0.01, 100, ""}},
               [](const ParamMap& p) { return Model(cube(p.at("side"))); }});
  r.push_back({"convex_hull", "mesh", "hull of random points on the unit sphere",
               {{"points", 10, 4, 64, "number of points"}, {"seed", 1, 0, 1e9, "RNG seed"}},
               [](const ParamMap& p) { return Model(random_hull_model(p)); }});
  r.push_back({"bricard1", "twin", "Bricard type I octahedron: pyramid twinned by a half-turn", bricard1_params,
               [](const ParamMap& p) { return Model(bricard1(p)); }});
  r.push_back({"bricard2", "twin", "Bricard type II octahedron: kite pyramid twinned by a reflection",
               {{"b_x", 1.8, -3, 3, "B = (b_x, b_y, b_z), B' = (b_x, b_y, -b_z); A = (2,0,0), A' = (-2,0,0)"},
                {"b_y", -1.5, -3, 3, ""},
                {"b_z", 1.5, 0.05, 3, ""},
                {"e_x", 0.3, -3, 3, "apex E"},
                {"e_y", 1.0, -3, 3, ""},
                {"e_z", 0.8, -3, 3, ""}},
               [](const ParamMap& p) { return Model(bricard2(p)); }});
  r.push_back({"twinned_anticupola", "twin", "twinned digonal anticupola: flexible triangulated dodecahedron", anticupola_shape,
               [](const ParamMap& p) { return Model(anticupola_twin(p)); }});
  r.push_back({"star_dodecahedron", "twin", "twinned anticupola with its peaks on opposite sides of the base", star,
               [](const ParamMap& p) { return Model(anticupola_twin(p)); }});
  r.push_back({"new_crinkle", "crinkle", "star dodecahedron without the rotated peak edge", star,
               [](const ParamMap& p) { return Model(new_crinkle(p)); }});
  r.push_back({"bricard_crinkle", "crinkle", "Bricard I octahedron without the two faces on edge A C'", bricard1_params,
               [](const ParamMap& p) { return Model(bricard_crinkle(p)); }});
  r.push_back({"pentagonal_crinkle", "crinkle", "twinned anticupola without edges C1 A1 and C2 A1 (two degrees of freedom)",
               with(crinkle_base, {{"phantom_offset", 0.03, -0.2, 0.2, "relative stretch of |C1 A1| away from the twin shape"}}), [](const ParamMap& p) { return Model(pentagonal_crinkle(p)); }});
  r.push_back({"tetrahedral_chain", "cap", "three linked tetrahedral caps on the pentagonal crinkle's boundary",
               with(crinkle_base, tents), [](const ParamMap& p) { return Model(tetrahedral_chain(p)); }});
  r.push_back({"foxtrot_template", "mesh", "pentagonal crinkle + tetrahedral chain + two Bricard crinkle pairs",
               with(with(crinkle_base, tents), crinkle_shape), [](const ParamMap& p) { return Model(foxtrot_template(p)); },
               foxtrot_drivers});
  r.push_back({"steffen_template", "mesh", "tetrahedron whose hinge is swapped for two Bricard crinkles",
               {{"depth", 0.8, 0.05, 3, "distance of S, T below the hinge"},
                {"spread", 0.4, 0.02, 3, "half of |ST|"},
                {"shift", 0.0, -1, 1, "offset of S, T along the hinge"},
                {"tip_height", 0.6, 0.05, 3, "flap tip distance from the hinge"},
                {"tip_along", 0.0, -1, 1, "flap tip offset along the hinge"},
                {"theta", 0.4, -3.14, 3.14, "crinkle half-turn axis angle"}},
               [](const ParamMap& p) { return Model(steffen_template(p)); }});
  return r;
}

}  // namespace detail

inline const std::vector<ModelSpec>& catalog_models() {
  static const std::vector<ModelSpec> models = detail::build_registry();
  return models;
}

inline const ModelSpec& model_spec(const std::string& name) {
  for (const auto& m : catalog_models()) {
    if (m.name == name) return m;
  }
  throw NotFoundError("unknown model '" + name + "'");
}

/// Defaults overlaid with `params`; rejects unknown names and out-of-range values.
inline ParamMap resolve_params(const ModelSpec& spec, const ParamMap& params) {
  ParamMap out;
  for (const auto& p : spec.params) out[p.name] = p.default_value;
  for (const auto& [k, v] : params) {
    const auto it = std::find_if(spec.params.begin(), spec.params.end(), [&](const ParamSpec& p) { return p.name == k; });
    if (it == spec.params.end()) throw ValidationError("model '" + spec.name + "' has no parameter '" + k + "'");
    if (!std::isfinite(v) || v < it->min || v > it->max) {
      std::ostringstream msg;
      msg << "parameter '" << k << "' = " << v << " outside [" << it->min << ", " << it->max << "]";
      throw ValidationError(msg.str());
    }
    out[k] = v;
  }
  return out;
}

inline DriverSetup model_drivers(const std::string& name, const Model& model) {
  const auto& spec = model_spec(name);
  return spec.drivers ? spec.drivers(model) : default_driver(model);
}

inline Model catalog(const std::string& name, const ParamMap& params = {}) {
  const auto& spec = model_spec(name);
  return spec.build(resolve_params(spec, params));
}

}  // namespace flexpoly
