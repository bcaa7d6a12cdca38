#pragma once

// The twinning construction (cut a cap off a symmetric quad, copy it
// through the quad's isometry, glue) and the surface surgeries built on
// the same mesh vocabulary: crinkles, tents, boundary gluing.

#include "flexpoly/symmetry.hpp"

#include <functional>
#include <variant>

namespace flexpoly {

/// Open surface with a single boundary loop. The loop is oriented like the
/// hole: for consecutive (u, v) the cap itself traverses v -> u.
struct Cap {
  TriMesh mesh;
  std::vector<int> boundary;
};

struct Twin {
  TriMesh mesh;
  std::vector<int> equator;  // A, B, A', B'
  std::vector<int> partner;  // involution: every vertex -> its image under the isometry
  SymmetryKind kind = SymmetryKind::TypeI;
};

/// Disk-topology surface; each phantom pair keeps its distance along the
/// flex the crinkle was cut from.
struct Crinkle {
  TriMesh mesh;
  std::vector<int> boundary;
  std::vector<Edge> phantom_pairs;
};

using Model = std::variant<TriMesh, Cap, Crinkle, Twin>;

inline const TriMesh& model_mesh(const Model& m) {
  return std::visit([](const auto& x) -> const TriMesh& {
    if constexpr (std::is_same_v<std::decay_t<decltype(x)>, TriMesh>) return x;
    else return x.mesh;
  }, m);
}

inline std::string model_kind(const Model& m) {
  switch (m.index()) {
    case 0: return "mesh";
    case 1: return "cap";
    case 2: return "crinkle";
    default: return "twin";
  }
}

namespace detail {

inline bool same_cycle(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  const auto it = std::find(b.begin(), b.end(), a.empty() ? -1 : a.front());
  if (a.empty()) return true;
  if (it == b.end()) return false;
  const std::size_t off = std::size_t(it - b.begin());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[(i + off) % b.size()]) return false;
  }
  return true;
}

inline std::set<int> used_vertices(const TriMesh& m) {
  std::set<int> s;
  for (const auto& f : m.faces()) s.insert(f.begin(), f.end());
  return s;
}

inline int euler_used(const TriMesh& m) {
  return int(used_vertices(m).size()) - int(m.edges().size()) + m.num_faces();
}

/// Drops vertices not referenced by any face and renumbers.
inline TriMesh compact(const TriMesh& m, std::vector<int>* old_to_new = nullptr) {
  const auto used = used_vertices(m);
  std::vector<int> remap(std::size_t(m.num_vertices()), -1);
  std::vector<Vec3> verts;
  for (int v : used) {
    remap[std::size_t(v)] = int(verts.size());
    verts.push_back(m.vertex(v));
  }
  std::vector<Face> faces;
  for (const auto& f : m.faces()) {
    faces.push_back({remap[std::size_t(f[0])], remap[std::size_t(f[1])], remap[std::size_t(f[2])]});
  }
  std::map<std::string, int> labels;
  for (const auto& [name, idx] : m.labels()) {
    if (remap[std::size_t(idx)] >= 0) labels[name] = remap[std::size_t(idx)];
  }
  if (old_to_new) *old_to_new = remap;
  return TriMesh(std::move(verts), std::move(faces), std::move(labels));
}

}  // namespace detail

inline void validate(const Cap& cap) {
  const auto loops = cap.mesh.boundary_loops();
  if (loops.size() != 1) throw ValidationError("cap must have exactly one boundary loop");
  if (!detail::same_cycle(cap.boundary, loops.front())) {
    throw ValidationError("cap boundary does not match the mesh boundary loop");
  }
}

inline void validate(const Crinkle& c) {
  const auto loops = c.mesh.boundary_loops();
  if (loops.size() != 1 || detail::euler_used(c.mesh) != 1 || c.mesh.face_components() != 1) {
    throw ValidationError("crinkle must be a disk (one boundary loop, Euler characteristic 1)");
  }
  if (!detail::same_cycle(c.boundary, loops.front())) {
    throw ValidationError("crinkle boundary does not match the mesh boundary loop");
  }
  for (const auto& p : c.phantom_pairs) {
    if (c.mesh.has_edge(p.a, p.b)) throw ValidationError("phantom pair is an edge of the crinkle");
  }
}

/// Removes the two faces on AA' and records the quadrilateral hole A, B, A', B'.
inline Cap make_cap(const TriMesh& mesh, const SymmetricQuad& quad) {
  if (!mesh.is_closed()) throw ValidationError("make_cap: mesh must be closed");
  const auto f1 = mesh.face_with_directed_edge(quad.a_prime, quad.a);
  const auto f2 = mesh.face_with_directed_edge(quad.a, quad.a_prime);
  auto has = [&](int fi, int v) {
    const auto& f = mesh.faces()[std::size_t(fi)];
    return std::find(f.begin(), f.end(), v) != f.end();
  };
  if (!f1 || !f2 || !has(*f1, quad.b) || !has(*f2, quad.b_prime)) {
    throw ValidationError("make_cap: faces (A,B,A') and (A',B',A) do not share the edge AA'");
  }
  std::vector<Face> faces;
  for (int fi = 0; fi < mesh.num_faces(); ++fi) {
    if (fi != *f1 && fi != *f2) faces.push_back(mesh.faces()[std::size_t(fi)]);
  }
  TriMesh open(mesh.vertices(), std::move(faces), mesh.labels());
  if (open.face_components() != 1 || detail::used_vertices(open).size() != std::size_t(mesh.num_vertices())) {
    throw ValidationError("make_cap: removing the edge disconnects the mesh");
  }
  Cap cap{std::move(open), {quad.a, quad.b, quad.a_prime, quad.b_prime}};
  validate(cap);
  return cap;
}

inline std::string primed(const std::string& label) { return label + "'"; }

/// Copies the cap through the equator's isometry and glues the copy back on.
inline Twin twin(const Cap& cap, SymmetryKind kind, double tol = kDefaultSymmetryTolerance) {
  validate(cap);
  if (cap.boundary.size() != 4) throw ValidationError("twin: cap boundary must be a quadrilateral");
  const std::array<int, 4> loop{cap.boundary[0], cap.boundary[1], cap.boundary[2], cap.boundary[3]};
  const auto& pts = cap.mesh.vertices();
  const auto q = quad_points(pts, loop);
  std::function<Vec3(const Vec3&)> iso;
  std::map<int, int> sigma;
  if (kind == SymmetryKind::TypeI) {
    const auto l = symmetry_line(q, tol);
    iso = [l](const Vec3& p) { return l.apply(p); };
    sigma = {{loop[0], loop[2]}, {loop[2], loop[0]}, {loop[1], loop[3]}, {loop[3], loop[1]}};
  } else {
    const auto pl = symmetry_plane(q, tol);
    iso = [pl](const Vec3& p) { return pl.apply(p); };
    sigma = {{loop[0], loop[0]}, {loop[2], loop[2]}, {loop[1], loop[3]}, {loop[3], loop[1]}};
  }

  const double diam = diameter(pts);
  std::vector<Vec3> verts = pts;
  std::map<std::string, int> labels = cap.mesh.labels();
  std::vector<int> partner(pts.size(), -1);
  std::map<int, int> image = sigma;
  std::vector<int> interior;
  for (int v : detail::used_vertices(cap.mesh)) {
    if (!sigma.count(v)) interior.push_back(v);
  }
  bool all_coincide = !interior.empty();
  for (int v : interior) {
    const Vec3 p = iso(pts[std::size_t(v)]);
    bool hit = false;
    for (int w : interior) hit = hit || (pts[std::size_t(w)] - p).norm() <= 1e-9 * diam;
    all_coincide = all_coincide && hit;
    image[v] = int(verts.size());
    verts.push_back(p);
    partner.push_back(v);
    partner[std::size_t(v)] = image[v];
  }
  if (all_coincide) {
    throw ValidationError("twin: the cap is already symmetric; the construction gives a double cover");
  }
  for (const auto& [v, w] : sigma) partner[std::size_t(v)] = w;
  for (int v : interior) {
    const std::string name = cap.mesh.label_of(v);
    if (cap.mesh.labels().count(name)) labels[primed(name)] = image[v];
  }

  // the copy is glued with opposite orientation when the isometry keeps the
  // loop's direction (half-turn) and with the same one when it reverses it
  const int s0 = sigma[loop[0]], s1 = sigma[loop[1]];
  bool keeps_direction = false;
  for (int k = 0; k < 4; ++k) keeps_direction = keeps_direction || (loop[std::size_t(k)] == s0 && loop[std::size_t((k + 1) % 4)] == s1);

  std::vector<Face> faces = cap.mesh.faces();
  std::set<std::set<int>> original;
  for (const auto& f : cap.mesh.faces()) original.insert({f[0], f[1], f[2]});
  for (const auto& f : cap.mesh.faces()) {
    Face g{image[f[0]], image[f[1]], image[f[2]]};
    if (keeps_direction) std::swap(g[1], g[2]);
    if (original.count({g[0], g[1], g[2]})) {
      throw ValidationError("twin: the copy coincides with the cap; the construction gives a double cover");
    }
    faces.push_back(g);
  }
  Twin t{TriMesh(std::move(verts), std::move(faces), std::move(labels)),
         {loop[0], loop[1], loop[2], loop[3]}, std::move(partner), kind};
  if (!mesh_stats(t.mesh).is_closed) throw ValidationError("twin: glued surface is not closed");
  return t;
}

/// Deletes the listed edges together with their incident faces; each removed
/// edge becomes a phantom pair. The result must be a disk.
inline Crinkle make_crinkle(const TriMesh& mesh, const std::vector<Edge>& remove_edges) {
  if (remove_edges.empty()) throw ValidationError("make_crinkle: no edges to remove");
  const auto ef = mesh.edge_faces();
  std::set<int> drop;
  for (const auto& e : remove_edges) {
    auto it = ef.find(e);
    if (it == ef.end() || it->second.size() != 2) {
      throw ValidationError("make_crinkle: (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                            ") is not an interior edge");
    }
    drop.insert(it->second.begin(), it->second.end());
  }
  std::vector<Face> faces;
  for (int fi = 0; fi < mesh.num_faces(); ++fi) {
    if (!drop.count(fi)) faces.push_back(mesh.faces()[std::size_t(fi)]);
  }
  TriMesh open(mesh.vertices(), std::move(faces), mesh.labels());
  const std::set<Edge> removed(remove_edges.begin(), remove_edges.end());
  for (const auto& e : mesh.edges()) {
    if (!removed.count(e) && !open.has_edge(e.a, e.b)) {
      throw ValidationError("make_crinkle: removal also deletes edge (" + std::to_string(e.a) + "," +
                            std::to_string(e.b) + ")");
    }
  }
  if (detail::used_vertices(open).size() != detail::used_vertices(mesh).size()) {
    throw ValidationError("make_crinkle: removal isolates a vertex");
  }
  std::vector<std::vector<int>> loops;
  try {
    loops = open.boundary_loops();
  } catch (const ValidationError&) {
    throw ValidationError("make_crinkle: removal pinches the surface (result is not a disk)");
  }
  if (loops.size() != 1 || detail::euler_used(open) != 1 || open.face_components() != 1) {
    throw ValidationError("make_crinkle: result is not a disk");
  }
  Crinkle c{std::move(open), loops.front(), {removed.begin(), removed.end()}};
  validate(c);
  return c;
}

inline Crinkle make_crinkle(const Twin& t, const std::vector<Edge>& remove_edges) {
  return make_crinkle(t.mesh, remove_edges);
}

/// Replaces face `face` by a cone to an apex at centroid + height * unit normal.
inline TriMesh erect_tent(const TriMesh& mesh, int face, double height) {
  if (face < 0 || face >= mesh.num_faces()) throw ValidationError("erect_tent: invalid face index");
  if (height == 0.0 || !std::isfinite(height)) throw ValidationError("erect_tent: height must be nonzero");
  const auto f = mesh.faces()[std::size_t(face)];
  const Vec3 n = mesh.face_normal(face);
  if (n.norm() == 0.0) throw DegenerateError("erect_tent: face has zero area");
  const Vec3 centroid = (mesh.vertex(f[0]) + mesh.vertex(f[1]) + mesh.vertex(f[2])) / 3.0;
  std::vector<Vec3> verts = mesh.vertices();
  const int apex = int(verts.size());
  verts.push_back(centroid + height * n.normalized());
  std::vector<Face> faces;
  for (int fi = 0; fi < mesh.num_faces(); ++fi) {
    if (fi != face) faces.push_back(mesh.faces()[std::size_t(fi)]);
  }
  for (int k = 0; k < 3; ++k) faces.push_back({f[k], f[(k + 1) % 3], apex});
  return TriMesh(std::move(verts), std::move(faces), mesh.labels());
}

/// A surface with one boundary loop, as accepted by glue_boundaries.
struct Bordered {
  TriMesh mesh;
  std::vector<int> boundary;

  Bordered(const Cap& c) : mesh(c.mesh), boundary(c.boundary) {}          // NOLINT
  Bordered(const Crinkle& c) : mesh(c.mesh), boundary(c.boundary) {}      // NOLINT
  Bordered(TriMesh m, std::vector<int> b) : mesh(std::move(m)), boundary(std::move(b)) {}
};

inline constexpr double kDefaultGlueTolerance = 1e-9;

/// Identifies vertex b_i of `second` with a_i of `first` for every (a_i, b_i)
/// in `correspondence`. Merging goes by the correspondence only; `second` is
/// first moved rigidly onto `first`'s boundary positions.
inline TriMesh glue_boundaries(const Bordered& first, const Bordered& second,
                               const std::vector<std::pair<int, int>>& correspondence,
                               double tol = kDefaultGlueTolerance) {
  if (correspondence.size() < 2) throw ValidationError("glue_boundaries: need at least two vertex pairs");
  std::map<int, int> b_to_a;
  for (const auto& [a, b] : correspondence) {
    if (std::find(first.boundary.begin(), first.boundary.end(), a) == first.boundary.end() ||
        std::find(second.boundary.begin(), second.boundary.end(), b) == second.boundary.end()) {
      throw ValidationError("glue_boundaries: correspondence uses a non-boundary vertex");
    }
    if (!b_to_a.emplace(b, a).second) throw ValidationError("glue_boundaries: vertex glued twice");
  }
  const auto& am = first.mesh;
  const auto& bm = second.mesh;
  const double scale = std::max(diameter(am.vertices()), diameter(bm.vertices()));

  // side lengths along glued boundary edges
  const auto n = second.boundary.size();
  for (std::size_t i = 0; i < n; ++i) {
    const int u = second.boundary[i], v = second.boundary[(i + 1) % n];
    if (!b_to_a.count(u) || !b_to_a.count(v)) continue;
    const int ua = b_to_a[u], va = b_to_a[v];
    if (!am.has_edge(ua, va)) continue;
    const double la = (am.vertex(ua) - am.vertex(va)).norm();
    const double lb = (bm.vertex(u) - bm.vertex(v)).norm();
    if (std::abs(la - lb) > tol * std::max(la, lb)) {
      throw ValidationError("glue_boundaries: boundary edge lengths differ (" + std::to_string(la) + " vs " +
                            std::to_string(lb) + ")");
    }
    // same-direction traversal after merging would break orientation
    if (am.face_with_directed_edge(ua, va) && bm.face_with_directed_edge(u, v)) {
      throw ValidationError("glue_boundaries: boundaries are traversed in the same direction (orientation mismatch)");
    }
  }

  std::vector<Vec3> from, to;
  for (const auto& [b, a] : b_to_a) {
    from.push_back(bm.vertex(b));
    to.push_back(am.vertex(a));
  }
  RigidTransform place;
  if (from.size() >= 3) {
    place = kabsch(from, to);
  } else {
    place.translation = to[0] - from[0];
  }
  double misfit = 0;
  for (std::size_t i = 0; i < from.size(); ++i) misfit = std::max(misfit, (place(from[i]) - to[i]).norm());
  if (misfit > std::max(tol, 1e-9) * scale * 10) {
    throw ValidationError("glue_boundaries: boundary shapes are not congruent");
  }

  std::vector<Vec3> verts = am.vertices();
  std::map<std::string, int> labels = am.labels();
  std::vector<int> remap(std::size_t(bm.num_vertices()), -1);
  for (int v = 0; v < bm.num_vertices(); ++v) {
    if (b_to_a.count(v)) {
      remap[std::size_t(v)] = b_to_a[v];
    } else {
      remap[std::size_t(v)] = int(verts.size());
      verts.push_back(place(bm.vertex(v)));
    }
  }
  for (const auto& [name, idx] : bm.labels()) {
    if (b_to_a.count(idx)) continue;
    labels[labels.count(name) ? name + "_b" : name] = remap[std::size_t(idx)];
  }
  std::vector<Face> faces = am.faces();
  for (const auto& f : bm.faces()) {
    faces.push_back({remap[std::size_t(f[0])], remap[std::size_t(f[1])], remap[std::size_t(f[2])]});
  }
  try {
    return TriMesh(std::move(verts), std::move(faces), std::move(labels));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("glue_boundaries: glued surface is invalid: ") + e.what());
  }
}

}  // namespace flexpoly
