#pragma once

// Symmetric quadrilaterals ABA'B' and the isometries that swap their
// vertices: a half-turn about a line (type I) or a mirror plane (type II).

#include "flexpoly/mesh.hpp"

namespace flexpoly {

enum class SymmetryKind { TypeI, TypeII };

inline std::string to_string(SymmetryKind k) { return k == SymmetryKind::TypeI ? "I" : "II"; }

inline SymmetryKind symmetry_kind_from_string(const std::string& s) {
  if (s == "I" || s == "1" || s == "type1" || s == "TypeI") return SymmetryKind::TypeI;
  if (s == "II" || s == "2" || s == "type2" || s == "TypeII") return SymmetryKind::TypeII;
  throw ValidationError("unknown symmetry kind '" + s + "'");
}

/// Quad on the interior edge a--a_prime: faces (a, b, a') and (a', b', a).
struct SymmetricQuad {
  int a = 0;
  int b = 0;
  int a_prime = 0;
  int b_prime = 0;
  bool type_one = false;
  bool type_two = false;

  bool is(SymmetryKind k) const { return k == SymmetryKind::TypeI ? type_one : type_two; }
  std::array<int, 4> loop() const { return {a, b, a_prime, b_prime}; }
};

struct QuadPoints {
  Vec3 a, b, a_prime, b_prime;

  double diameter() const {
    const std::array<Vec3, 4> p{a, b, a_prime, b_prime};
    return flexpoly::diameter(p);
  }
  double mean_side() const {
    return ((a - b).norm() + (b - a_prime).norm() + (a_prime - b_prime).norm() + (b_prime - a).norm()) / 4.0;
  }
};

inline QuadPoints quad_points(std::span<const Vec3> pts, const std::array<int, 4>& loop) {
  return {pts[std::size_t(loop[0])], pts[std::size_t(loop[1])], pts[std::size_t(loop[2])],
          pts[std::size_t(loop[3])]};
}

inline constexpr double kDefaultSymmetryTolerance = 1e-9;

/// |AB| = |A'B'| and |AB'| = |A'B|, relative to the mean side length.
inline bool satisfies_type_one(const QuadPoints& q, double tol = kDefaultSymmetryTolerance) {
  const double s = tol * q.mean_side();
  return std::abs((q.a - q.b).norm() - (q.a_prime - q.b_prime).norm()) <= s &&
         std::abs((q.a - q.b_prime).norm() - (q.a_prime - q.b).norm()) <= s;
}

/// |AB| = |AB'| and |A'B| = |A'B'|.
inline bool satisfies_type_two(const QuadPoints& q, double tol = kDefaultSymmetryTolerance) {
  const double s = tol * q.mean_side();
  return std::abs((q.a - q.b).norm() - (q.a - q.b_prime).norm()) <= s &&
         std::abs((q.a_prime - q.b).norm() - (q.a_prime - q.b_prime).norm()) <= s;
}

struct SymmetryLine {
  Point3 point;
  Vec3 direction;

  Vec3 apply(const Vec3& p) const {
    const Vec3 foot = point + direction * (p - point).dot(direction);
    return 2.0 * foot - p;
  }
};

struct SymmetryPlane {
  Point3 point;
  Vec3 normal;

  Vec3 apply(const Vec3& p) const { return p - 2.0 * (p - point).dot(normal) * normal; }
};

inline std::vector<Vec3> apply_half_rotation(const SymmetryLine& line, std::span<const Vec3> pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(line.apply(p));
  return out;
}

inline std::vector<Vec3> apply_reflection(const SymmetryPlane& plane, std::span<const Vec3> pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(plane.apply(p));
  return out;
}

/// Threshold (relative to quad diameter) below which the midpoints of AA' and
/// BB' count as coincident and the planar-parallelogram branch is taken.
inline constexpr double kCoincidentMidpoints = 1e-10;

/// Line through the midpoints X of AA' and Y of BB' (or, when they coincide,
/// the normal line through the common midpoint), without checking lengths.
inline SymmetryLine line_through_midpoints(const QuadPoints& q) {
  const double diam = q.diameter();
  if (diam == 0.0) throw DegenerateError("symmetry_line: all four points coincide");
  const Vec3 x = 0.5 * (q.a + q.a_prime);
  const Vec3 y = 0.5 * (q.b + q.b_prime);
  Vec3 dir;
  if ((y - x).norm() > kCoincidentMidpoints * diam) {
    dir = y - x;
  } else {
    dir = (q.a_prime - q.a).cross(q.b_prime - q.b);
    if (dir.norm() <= 1e-12 * diam * diam) throw DegenerateError("symmetry_line: quad points are collinear");
  }
  return {x, canonical_direction(dir)};
}

inline SymmetryLine symmetry_line(const QuadPoints& q, double tol = kDefaultSymmetryTolerance) {
  if (!satisfies_type_one(q, tol)) {
    throw ValidationError("symmetry_line: |AB| = |A'B'| and |AB'| = |A'B| do not hold");
  }
  const SymmetryLine l = line_through_midpoints(q);
  const double slack = std::max(tol, 1e-9) * q.diameter() * 10;
  if ((l.apply(q.a) - q.a_prime).norm() > slack || (l.apply(q.b) - q.b_prime).norm() > slack) {
    throw DegenerateError("symmetry_line: half-turn does not swap the quad vertices");
  }
  return l;
}

/// Plane with normal along BB'. When the type II lengths hold it passes
/// through A, A' and the midpoint of BB'; it is reported with the midpoint of
/// AA' as its point. If B = B' the plane through A, A', B is returned.
inline SymmetryPlane plane_through_bisector(const QuadPoints& q) {
  const double diam = q.diameter();
  if ((q.a - q.a_prime).norm() <= kCoincidentMidpoints * std::max(diam, 1e-300)) {
    throw DegenerateError("symmetry_plane: A and A' coincide");
  }
  const Vec3 mid = 0.5 * (q.a + q.a_prime);
  Vec3 n = q.b_prime - q.b;
  if (n.norm() <= kCoincidentMidpoints * diam) {
    const Vec3 axis = q.a_prime - q.a;
    n = axis.cross(q.b - q.a);
    if (n.norm() <= 1e-12 * diam * diam) n = any_perpendicular(axis);
  }
  return {mid, canonical_direction(n)};
}

inline SymmetryPlane symmetry_plane(const QuadPoints& q, double tol = kDefaultSymmetryTolerance) {
  if (!satisfies_type_two(q, tol)) {
    throw ValidationError("symmetry_plane: |AB| = |AB'| and |A'B| = |A'B'| do not hold");
  }
  const SymmetryPlane p = plane_through_bisector(q);
  const double slack = std::max(tol, 1e-9) * q.diameter() * 10;
  if ((p.apply(q.a) - q.a).norm() > slack || (p.apply(q.a_prime) - q.a_prime).norm() > slack ||
      (p.apply(q.b) - q.b_prime).norm() > slack) {
    throw DegenerateError("symmetry_plane: reflection does not fix A, A' and swap B, B'");
  }
  return p;
}

/// Interior edges AA' whose two triangles ABA', A'B'A form a type I and/or
/// type II quad within relative tolerance `tol`.
inline std::vector<SymmetricQuad> find_symmetric_quads(const TriMesh& mesh,
                                                       double tol = kDefaultSymmetryTolerance) {
  std::vector<SymmetricQuad> out;
  for (const auto& [e, fs] : mesh.edge_faces()) {
    if (fs.size() != 2) continue;
    const int a = e.a, ap = e.b;
    // face (a, b, a') traverses a' -> a; face (a', b', a) traverses a -> a'
    const auto f1 = mesh.face_with_directed_edge(ap, a);
    const auto f2 = mesh.face_with_directed_edge(a, ap);
    if (!f1 || !f2) continue;
    auto third = [&](int fi) {
      for (int v : mesh.faces()[std::size_t(fi)]) {
        if (v != a && v != ap) return v;
      }
      return -1;
    };
    SymmetricQuad q{a, third(*f1), ap, third(*f2)};
    if (q.b == q.b_prime) continue;
    const auto pts = quad_points(mesh.vertices(), q.loop());
    q.type_one = satisfies_type_one(pts, tol);
    q.type_two = satisfies_type_two(pts, tol);
    if (q.type_one || q.type_two) out.push_back(q);
  }
  return out;
}

}  // namespace flexpoly
