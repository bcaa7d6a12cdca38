#pragma once

// Swapping a hinge edge for two opposing Bricard crinkles. Each crinkle is a
// type I Bricard octahedron that contains one hinge face and has the hinge as
// an edge; removing that face and its neighbour across the hinge leaves a
// disk whose two hinge endpoints keep their distance while it flexes.

#include "flexpoly/twinning.hpp"

#include <numbers>

namespace flexpoly {

/// Shape of the inserted crinkle pair. The shared flap tip sits at
/// mid(PQ) + tip_along |PQ| e_PQ + tip_height |PQ| u, where u is the
/// outward bisector of the hinge's dihedral corridor. Each crinkle's
/// half-turn axis passes through the midpoint of (hinge face apex, tip);
/// theta picks its direction in the plane perpendicular to that segment.
struct HingeCrinkleParams {
  double tip_height = 0.6;
  double tip_along = 0.0;
  double theta1 = 0.4;
  std::optional<double> theta2;  // defaults to -theta1 (mirror image)
  std::string label_prefix = "h";
};

struct HingeReplacement {
  TriMesh mesh;
  Edge phantom;              // the former hinge, now a phantom pair
  std::array<int, 5> added;  // tip, then R1(P), R1(Q), R2(P), R2(Q)
};

namespace detail {

inline Vec3 half_turn_axis_dir(const Vec3& from, const Vec3& to, const Vec3& hint, double theta) {
  const Vec3 d = (to - from).normalized();
  Vec3 e1 = hint - d * hint.dot(d);
  if (e1.norm() < 1e-9 * hint.norm()) e1 = any_perpendicular(d);
  e1.normalize();
  const Vec3 e2 = d.cross(e1);
  return std::cos(theta) * e1 + std::sin(theta) * e2;
}

/// The six faces of a Bricard crinkle with A = p, B = s, C' = q, B' = tip,
/// A' = ap, C = c, in the octahedron's own orientation.
inline std::array<Face, 6> bricard_crinkle_faces(int p, int s, int q, int tip, int ap, int c) {
  return {{{s, p, c}, {ap, s, c}, {tip, ap, c}, {p, tip, c}, {ap, tip, q}, {s, ap, q}}};
}

}  // namespace detail

inline HingeReplacement replace_hinge_with_crinkles(const TriMesh& mesh, Edge hinge,
                                                    const HingeCrinkleParams& params = {}) {
  const auto ef = mesh.edge_faces();
  const auto it = ef.find(hinge);
  if (it == ef.end() || it->second.size() != 2) {
    throw ValidationError("replace_hinge_with_crinkles: hinge must be an interior edge");
  }
  if (!(params.tip_height > 0) || !std::isfinite(params.tip_along)) {
    throw ValidationError("replace_hinge_with_crinkles: tip_height must be positive");
  }
  const int p = hinge.a, q = hinge.b;
  const auto f_pq = mesh.face_with_directed_edge(p, q);
  const auto f_qp = mesh.face_with_directed_edge(q, p);
  auto apex = [&](int fi) {
    for (int v : mesh.faces()[std::size_t(fi)]) {
      if (v != p && v != q) return v;
    }
    return -1;
  };
  const int s = apex(*f_pq), t = apex(*f_qp);
  const Vec3 P = mesh.vertex(p), Q = mesh.vertex(q), S = mesh.vertex(s), T = mesh.vertex(t);
  const double len = (Q - P).norm();
  const Vec3 axis = (Q - P) / len;
  auto perp = [&](const Vec3& x) {
    const Vec3 r = x - P;
    return Vec3(r - axis * r.dot(axis));
  };
  Vec3 inward = perp(S).normalized() + perp(T).normalized();
  if (inward.norm() < 1e-9) inward = axis.cross(perp(S)).normalized();  // flat hinge: pick a side
  const Vec3 u = -inward.normalized();
  const Vec3 tip = 0.5 * (P + Q) + params.tip_along * len * axis + params.tip_height * len * u;

  const double theta2 = params.theta2.value_or(-params.theta1);
  const SymmetryLine l1{0.5 * (S + tip), detail::half_turn_axis_dir(S, tip, Q - P, params.theta1)};
  const SymmetryLine l2{0.5 * (T + tip), detail::half_turn_axis_dir(T, tip, Q - P, theta2)};

  std::vector<Vec3> verts = mesh.vertices();
  const int base = int(verts.size());
  const std::array<Vec3, 5> fresh{tip, l1.apply(P), l1.apply(Q), l2.apply(P), l2.apply(Q)};
  const double diam = diameter(verts);
  for (const auto& x : fresh) {
    for (const auto& y : verts) {
      if ((x - y).norm() <= 1e-9 * diam) throw DegenerateError("replace_hinge_with_crinkles: crinkle vertex lands on an existing vertex");
    }
    verts.push_back(x);
  }

  std::vector<Face> kept;
  for (int fi = 0; fi < mesh.num_faces(); ++fi) {
    if (fi != *f_pq && fi != *f_qp) kept.push_back(mesh.faces()[std::size_t(fi)]);
  }
  std::set<std::pair<int, int>> directed;
  for (const auto& f : kept) {
    for (int k = 0; k < 3; ++k) directed.insert({f[k], f[(k + 1) % 3]});
  }
  auto block = [&](int apex_v, int ap, int c) {
    auto faces = detail::bricard_crinkle_faces(p, apex_v, q, base, ap, c);
    bool clash = false;
    for (const auto& f : faces) {
      for (int k = 0; k < 3; ++k) clash = clash || directed.count({f[k], f[(k + 1) % 3]});
    }
    if (clash) {
      for (auto& f : faces) std::swap(f[1], f[2]);
    }
    for (const auto& f : faces) {
      for (int k = 0; k < 3; ++k) directed.insert({f[k], f[(k + 1) % 3]});
    }
    return faces;
  };
  std::vector<Face> faces = kept;
  for (const auto& f : block(s, base + 1, base + 2)) faces.push_back(f);
  for (const auto& f : block(t, base + 3, base + 4)) faces.push_back(f);

  auto labels = mesh.labels();
  const std::string& px = params.label_prefix;
  const std::array<std::string, 5> names{"tip", "a1", "c1", "a2", "c2"};
  for (std::size_t k = 0; k < 5; ++k) labels[px + names[k]] = base + int(k);

  TriMesh out = [&] {
    try {
      return TriMesh(std::move(verts), std::move(faces), std::move(labels));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("replace_hinge_with_crinkles: result is not a valid surface: ") + e.what());
    }
  }();
  (void)edge_lengths(out);  // rejects zero-length edges
  return {std::move(out), hinge, {base, base + 1, base + 2, base + 3, base + 4}};
}

}  // namespace flexpoly
