#pragma once

// Planar nets with mountain/valley labels and gluing marks, SVG output for
// printing, and the frames JSON consumed by external viewers.

#include "flexpoly/collision.hpp"
#include "flexpoly/mesh_io.hpp"

#include <deque>
#include <iomanip>

namespace flexpoly {

enum class Fold { Mountain, Valley, Flat };

inline std::string to_string(Fold f) {
  switch (f) {
    case Fold::Mountain: return "mountain";
    case Fold::Valley: return "valley";
    default: return "flat";
  }
}

inline constexpr double kFlatFoldTolerance = 1e-6;

/// Interior dihedral angle along a shared edge, measured on the side the
/// face normals point away from. Convex edges are below pi.
struct Dihedral {
  double angle = std::numbers::pi;
  Fold fold = Fold::Flat;
};

/// Dihedral between face `f` (which traverses u -> v) and face `g`
/// (v -> u), with apices `w` and `z`.
inline Dihedral dihedral_at(const Vec3& u, const Vec3& v, const Vec3& w, const Vec3& z) {
  const Vec3 n1 = (v - u).cross(w - u), n2 = (u - v).cross(z - v);
  if (n1.norm() == 0.0 || n2.norm() == 0.0) throw DegenerateError("dihedral of a degenerate face");
  const double bend = std::atan2(n1.cross(n2).norm(), n1.dot(n2));
  Dihedral d;
  if (std::abs(bend) < kFlatFoldTolerance) return d;
  const bool convex = n1.dot(z - u) < 0.0;
  d.angle = convex ? std::numbers::pi - bend : std::numbers::pi + bend;
  d.fold = convex ? Fold::Mountain : Fold::Valley;
  return d;
}

struct NetFace {
  int face = 0;                      // mesh face index
  std::array<Vec2, 3> corners;       // in the mesh face's vertex order
  int parent = -1;                   // mesh face it hinges on (-1: root)
  std::optional<Edge> hinge;         // shared edge with the parent
};

struct Crease {
  Edge edge;
  int f1 = 0, f2 = 0;
  Dihedral dihedral;
};

/// Matching marks drawn on both sides of a cut. Equal marks glue together.
struct GlueMark {
  Edge edge;
  int f1 = 0, f2 = 0;
  int id = 0;
  std::string symbol;
  std::string color;
  Dihedral dihedral;  // fold to apply once glued
};

struct NetOverlap {
  int f1 = 0, f2 = 0;
  double area = 0;
};

struct Net {
  int root = -1;
  std::vector<NetFace> faces;  // placement (breadth-first) order
  std::vector<Crease> creases;
  std::vector<GlueMark> cuts;
  std::vector<Edge> boundary;  // edges with a single face (open surfaces)
  std::vector<NetOverlap> overlaps;

  bool empty() const { return faces.empty(); }
  const NetFace& placed(int mesh_face) const {
    for (const auto& f : faces) {
      if (f.face == mesh_face) return f;
    }
    throw ValidationError("face " + std::to_string(mesh_face) + " is not in the net");
  }
};

struct UnfoldOptions {
  std::optional<int> root;  // default: largest-area face
  /// Explicit spanning tree: parent face per mesh face, -1 for the root.
  /// Parents must share an edge with their child.
  std::optional<std::vector<int>> parents;
  double overlap_tol = 1e-9;  // relative to the squared net diameter
};

inline const std::vector<std::string>& glue_symbols() {
  static const std::vector<std::string> s{"circle", "square", "triangle", "diamond", "cross", "plus", "star", "hexagon"};
  return s;
}

inline const std::vector<std::string>& glue_colors() {
  static const std::vector<std::string> c{"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
                                          "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};
  return c;
}

namespace detail {

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Third corner of a triangle on the far side of line (a, b) from `avoid`.
inline Vec2 place_apex(const Vec2& a, const Vec2& b, double da, double db, const Vec2& avoid) {
  const Vec2 ab = b - a;
  const double len = ab.norm();
  const Vec2 e = ab / len;
  const Vec2 n(-e.y(), e.x());
  const double x = (da * da - db * db + len * len) / (2 * len);
  const double y = std::sqrt(std::max(0.0, da * da - x * x));
  const double side = cross2(ab, avoid - a) > 0 ? -1.0 : 1.0;
  return a + x * e + side * y * n;
}

inline double polygon_area2(const std::vector<Vec2>& p) {
  double a = 0;
  for (std::size_t i = 0; i < p.size(); ++i) a += cross2(p[i], p[(i + 1) % p.size()]);
  return 0.5 * std::abs(a);
}

inline int corner_of(const Face& f, int v) {
  for (int k = 0; k < 3; ++k) {
    if (f[std::size_t(k)] == v) return k;
  }
  return -1;
}

inline int apex_of(const Face& f, const Edge& e) {
  for (int v : f) {
    if (!e.has(v)) return v;
  }
  return -1;
}

/// Dihedral at `e` between faces fi and fj of a consistently oriented mesh.
inline Dihedral edge_dihedral(const TriMesh& mesh, std::span<const Vec3> x, int fi, int fj, const Edge& e) {
  const auto& f = mesh.faces()[std::size_t(fi)];
  const auto& g = mesh.faces()[std::size_t(fj)];
  // orient the edge the way f traverses it
  int u = e.a, v = e.b;
  const int ku = corner_of(f, u);
  if (f[std::size_t((ku + 1) % 3)] != v) std::swap(u, v);
  const int w = apex_of(f, e), z = apex_of(g, e);
  return dihedral_at(x[std::size_t(u)], x[std::size_t(v)], x[std::size_t(w)], x[std::size_t(z)]);
}

inline std::vector<int> bfs_parents(const TriMesh& mesh, int root, const std::map<Edge, std::vector<int>>& ef) {
  std::vector<int> parent(std::size_t(mesh.num_faces()), -2);
  parent[std::size_t(root)] = -1;
  std::deque<int> queue{root};
  while (!queue.empty()) {
    const int fi = queue.front();
    queue.pop_front();
    const auto& f = mesh.faces()[std::size_t(fi)];
    for (int k = 0; k < 3; ++k) {
      for (int fj : ef.at(Edge(f[std::size_t(k)], f[std::size_t((k + 1) % 3)]))) {
        if (parent[std::size_t(fj)] == -2) {
          parent[std::size_t(fj)] = fi;
          queue.push_back(fj);
        }
      }
    }
  }
  return parent;
}

inline std::optional<Edge> shared_edge(const Face& f, const Face& g) {
  std::vector<int> common;
  for (int v : f) {
    if (corner_of(g, v) >= 0) common.push_back(v);
  }
  if (common.size() != 2) return std::nullopt;
  return Edge(common[0], common[1]);
}

}  // namespace detail

/// Unfolds the surface at coordinates `x` along a spanning tree of its
/// face-adjacency graph. Overlaps are reported, not resolved.
inline Net unfold(const TriMesh& mesh, std::span<const Vec3> x, const UnfoldOptions& opt = {}) {
  const int nf = mesh.num_faces();
  if (nf == 0) throw ValidationError("unfold: mesh has no faces");
  if (std::ssize(x) != mesh.num_vertices()) throw ValidationError("unfold: coordinate count does not match the mesh");
  const auto ef = mesh.edge_faces();
  for (const auto& [e, fs] : ef) {
    if (fs.size() > 2) throw ValidationError("unfold: non-manifold edge");
  }

  std::vector<int> parent;
  int root = -1;
  if (opt.parents) {
    parent = *opt.parents;
    if (std::ssize(parent) != nf) throw ValidationError("unfold: parents must list one entry per face");
    for (int fi = 0; fi < nf; ++fi) {
      const int p = parent[std::size_t(fi)];
      if (p == -1) {
        if (root >= 0) throw ValidationError("unfold: parents name more than one root");
        root = fi;
      } else if (p < 0 || p >= nf || !detail::shared_edge(mesh.faces()[std::size_t(fi)], mesh.faces()[std::size_t(p)])) {
        throw ValidationError("unfold: face " + std::to_string(fi) + " has an invalid parent");
      }
    }
    if (root < 0) throw ValidationError("unfold: parents name no root");
  } else {
    if (opt.root) {
      root = *opt.root;
      if (root < 0 || root >= nf) throw ValidationError("unfold: root face out of range");
    } else {
      double best = -1;
      for (int fi = 0; fi < nf; ++fi) {
        const auto& f = mesh.faces()[std::size_t(fi)];
        const double a = triangle_area(x[std::size_t(f[0])], x[std::size_t(f[1])], x[std::size_t(f[2])]);
        if (a > best * (1 + 1e-12)) best = a, root = fi;
      }
    }
    parent = detail::bfs_parents(mesh, root, ef);
    for (int p : parent) {
      if (p == -2) throw ValidationError("unfold: mesh is not connected");
    }
  }

  // placement order: parents before children
  std::vector<std::vector<int>> children(static_cast<std::size_t>(nf));
  for (int fi = 0; fi < nf; ++fi) {
    if (parent[std::size_t(fi)] >= 0) children[std::size_t(parent[std::size_t(fi)])].push_back(fi);
  }
  std::vector<int> order{root};
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (int c : children[std::size_t(order[k])]) order.push_back(c);
  }
  if (std::ssize(order) != nf) throw ValidationError("unfold: parents do not form a spanning tree");

  Net net;
  net.root = root;
  std::vector<int> slot(std::size_t(nf), -1);
  auto len = [&](int a, int b) { return (x[std::size_t(a)] - x[std::size_t(b)]).norm(); };
  for (int fi : order) {
    const auto& f = mesh.faces()[std::size_t(fi)];
    NetFace nfc;
    nfc.face = fi;
    nfc.parent = parent[std::size_t(fi)];
    if (nfc.parent < 0) {
      const Vec3 a = x[std::size_t(f[0])], b = x[std::size_t(f[1])], c = x[std::size_t(f[2])];
      const double ab = (b - a).norm();
      if (ab == 0.0) throw DegenerateError("unfold: zero-length edge");
      const double t = (c - a).dot(b - a) / ab;
      nfc.corners = {Vec2(0, 0), Vec2(ab, 0), Vec2(t, std::sqrt(std::max(0.0, (c - a).squaredNorm() - t * t)))};
    } else {
      const auto& pf = net.faces[std::size_t(slot[std::size_t(nfc.parent)])];
      const auto& g = mesh.faces()[std::size_t(nfc.parent)];
      const Edge e = *detail::shared_edge(f, g);
      nfc.hinge = e;
      const Vec2 pa = pf.corners[std::size_t(detail::corner_of(g, e.a))];
      const Vec2 pb = pf.corners[std::size_t(detail::corner_of(g, e.b))];
      const Vec2 pw = pf.corners[std::size_t(detail::corner_of(g, detail::apex_of(g, e)))];
      const int w = detail::apex_of(f, e);
      if ((pb - pa).norm() == 0.0) throw DegenerateError("unfold: zero-length edge");
      const Vec2 pc = detail::place_apex(pa, pb, len(e.a, w), len(e.b, w), pw);
      nfc.corners[std::size_t(detail::corner_of(f, e.a))] = pa;
      nfc.corners[std::size_t(detail::corner_of(f, e.b))] = pb;
      nfc.corners[std::size_t(detail::corner_of(f, w))] = pc;
    }
    slot[std::size_t(fi)] = int(net.faces.size());
    net.faces.push_back(nfc);
  }

  for (const auto& [e, fs] : ef) {
    if (fs.size() == 1) {
      net.boundary.push_back(e);
      continue;
    }
    const int f1 = fs[0], f2 = fs[1];
    const Dihedral d = detail::edge_dihedral(mesh, x, f1, f2, e);
    const bool tree = parent[std::size_t(f1)] == f2 || parent[std::size_t(f2)] == f1;
    if (tree && (net.faces[std::size_t(slot[std::size_t(f1)])].hinge == e || net.faces[std::size_t(slot[std::size_t(f2)])].hinge == e)) {
      net.creases.push_back({e, f1, f2, d});
    } else {
      const int id = int(net.cuts.size());
      const auto& sy = glue_symbols();
      const auto& co = glue_colors();
      net.cuts.push_back({e, f1, f2, id, sy[std::size_t(id) % sy.size()], co[(std::size_t(id) / sy.size()) % co.size()], d});
    }
  }

  // overlap detection between placed faces (shared edges and corners have zero area)
  double diam = 0;
  {
    Vec2 lo = net.faces[0].corners[0], hi = lo;
    for (const auto& f : net.faces) {
      for (const auto& c : f.corners) lo = lo.cwiseMin(c), hi = hi.cwiseMax(c);
    }
    diam = (hi - lo).norm();
  }
  const double area_tol = opt.overlap_tol * diam * diam;
  const double clip_eps = -1e-12 * diam;  // shrink slightly so shared edges do not count
  for (std::size_t i = 0; i < net.faces.size(); ++i) {
    for (std::size_t j = i + 1; j < net.faces.size(); ++j) {
      const auto& a = net.faces[i].corners;
      const auto& b = net.faces[j].corners;
      const Vec2 alo = a[0].cwiseMin(a[1]).cwiseMin(a[2]), ahi = a[0].cwiseMax(a[1]).cwiseMax(a[2]);
      const Vec2 blo = b[0].cwiseMin(b[1]).cwiseMin(b[2]), bhi = b[0].cwiseMax(b[1]).cwiseMax(b[2]);
      if ((alo.array() > bhi.array()).any() || (blo.array() > ahi.array()).any()) continue;
      const auto poly = detail::clip_polygon({a[0], a[1], a[2]}, b, clip_eps);
      const double area = poly.size() < 3 ? 0.0 : detail::polygon_area2(poly);
      if (area > area_tol) net.overlaps.push_back({net.faces[i].face, net.faces[j].face, area});
    }
  }
  return net;
}

inline Net unfold(const TriMesh& mesh, const UnfoldOptions& opt = {}) { return unfold(mesh, mesh.vertices(), opt); }

/// Largest relative side-length mismatch between placed 2D faces and the
/// corresponding 3D faces.
inline double net_congruence_error(const Net& net, const TriMesh& mesh, std::span<const Vec3> x) {
  double worst = 0;
  for (const auto& nfc : net.faces) {
    const auto& f = mesh.faces()[std::size_t(nfc.face)];
    for (int k = 0; k < 3; ++k) {
      const std::size_t i = std::size_t(k), j = std::size_t((k + 1) % 3);
      const double l3 = (x[std::size_t(f[i])] - x[std::size_t(f[j])]).norm();
      const double l2 = (nfc.corners[i] - nfc.corners[j]).norm();
      worst = std::max(worst, std::abs(l3 - l2) / l3);
    }
  }
  return worst;
}

/// Folds the net back into space using only its own data: 2D faces, tree
/// creases, fold labels and dihedral angles. Returns one position per mesh
/// vertex (the first placement of each), NaN for vertices in no face.
inline std::vector<Vec3> refold(const Net& net, const TriMesh& mesh) {
  if (net.empty()) throw ValidationError("refold: empty net");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::map<int, std::array<Vec3, 3>> placed;
  std::map<Edge, Dihedral> crease_of;
  for (const auto& c : net.creases) crease_of[c.edge] = c.dihedral;

  for (const auto& nfc : net.faces) {
    const auto& f = mesh.faces()[std::size_t(nfc.face)];
    std::array<Vec3, 3> p;
    if (nfc.parent < 0) {
      for (std::size_t k = 0; k < 3; ++k) p[k] = Vec3(nfc.corners[k].x(), nfc.corners[k].y(), 0.0);
    } else {
      const auto& g = mesh.faces()[std::size_t(nfc.parent)];
      const auto& gp = placed.at(nfc.parent);
      const Edge e = *nfc.hinge;
      const int ia = detail::corner_of(f, e.a), ib = detail::corner_of(f, e.b);
      const int iw = 3 - ia - ib;
      const Vec3 A = gp[std::size_t(detail::corner_of(g, e.a))], B = gp[std::size_t(detail::corner_of(g, e.b))];
      const Vec3 W = gp[std::size_t(detail::corner_of(g, detail::apex_of(g, e)))];
      // local frame of the child apex relative to the hinge, from the 2D net
      const Vec2 a2 = nfc.corners[std::size_t(ia)], b2 = nfc.corners[std::size_t(ib)], c2 = nfc.corners[std::size_t(iw)];
      const Vec2 e2 = (b2 - a2).normalized();
      const double along = (c2 - a2).dot(e2);
      const double away = std::abs(detail::cross2(e2, c2 - a2));
      // 3D: hinge direction, in-plane direction away from the parent apex, parent normal
      const Vec3 e3 = (B - A).normalized();
      Vec3 d3 = (W - A) - e3 * (W - A).dot(e3);
      d3 = -d3.normalized();
      // outward normal of the parent face from its own vertex order
      const Vec3 n3 = (gp[1] - gp[0]).cross(gp[2] - gp[0]).normalized();
      const Dihedral dh = crease_of.at(e);
      const double phi = std::numbers::pi - dh.angle;  // bend away from flat; positive folds inward
      const Vec3 dir = std::cos(phi) * d3 - std::sin(phi) * n3;
      p[std::size_t(ia)] = A;
      p[std::size_t(ib)] = B;
      p[std::size_t(iw)] = A + along * e3 + away * dir;
    }
    placed[nfc.face] = p;
  }
  std::vector<Vec3> out(std::size_t(mesh.num_vertices()), Vec3(nan, nan, nan));
  std::vector<bool> seen(out.size(), false);
  for (const auto& nfc : net.faces) {
    const auto& f = mesh.faces()[std::size_t(nfc.face)];
    for (std::size_t k = 0; k < 3; ++k) {
      if (!seen[std::size_t(f[k])]) out[std::size_t(f[k])] = placed[nfc.face][k], seen[std::size_t(f[k])] = true;
    }
  }
  return out;
}

/// Procrustes distance between the refolded net and the frame, over the
/// vertices used by faces.
inline double refold_residual(const Net& net, const TriMesh& mesh, std::span<const Vec3> x) {
  const auto back = refold(net, mesh);
  std::vector<Vec3> a, b;
  for (std::size_t i = 0; i < back.size(); ++i) {
    if (is_finite(back[i])) a.push_back(back[i]), b.push_back(x[i]);
  }
  return procrustes_residual(a, b);
}

// SVG

struct SvgOptions {
  double mm_per_unit = 40.0;
  double margin_mm = 10.0;
  bool face_numbers = true;
};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << (std::abs(v) < 5e-4 ? 0.0 : v);
  return os.str();
}

inline std::string glue_glyph(const std::string& symbol, const std::string& color, double cx, double cy, double r) {
  std::ostringstream os;
  const std::string style = " fill=\"" + color + "\" stroke=\"none\"";
  auto poly = [&](int n, double phase, double inner) {
    os << "<polygon points=\"";
    const int m = inner > 0 ? 2 * n : n;
    for (int k = 0; k < m; ++k) {
      const double ang = phase + 2 * std::numbers::pi * k / m;
      const double rr = (inner > 0 && k % 2) ? r * inner : r;
      os << (k ? " " : "") << fmt(cx + rr * std::cos(ang)) << "," << fmt(cy + rr * std::sin(ang));
    }
    os << "\"" << style << "/>";
  };
  if (symbol == "circle") {
    os << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\"" << fmt(r) << "\"" << style << "/>";
  } else if (symbol == "square") {
    os << "<rect x=\"" << fmt(cx - r * 0.8) << "\" y=\"" << fmt(cy - r * 0.8) << "\" width=\"" << fmt(1.6 * r)
       << "\" height=\"" << fmt(1.6 * r) << "\"" << style << "/>";
  } else if (symbol == "triangle") {
    poly(3, -std::numbers::pi / 2, 0);
  } else if (symbol == "diamond") {
    poly(4, 0, 0);
  } else if (symbol == "star") {
    poly(5, -std::numbers::pi / 2, 0.45);
  } else if (symbol == "hexagon") {
    poly(6, 0, 0);
  } else {
    const double rot = symbol == "cross" ? std::numbers::pi / 4 : 0.0;
    for (int k = 0; k < 2; ++k) {
      const double ang = rot + k * std::numbers::pi / 2;
      os << "<line x1=\"" << fmt(cx - r * std::cos(ang)) << "\" y1=\"" << fmt(cy - r * std::sin(ang)) << "\" x2=\""
         << fmt(cx + r * std::cos(ang)) << "\" y2=\"" << fmt(cy + r * std::sin(ang)) << "\" stroke=\"" << color
         << "\" stroke-width=\"" << fmt(r * 0.45) << "\"/>";
    }
  }
  return os.str();
}

}  // namespace detail

/// SVG 1.1 document of the net in millimetres. Mountain creases are solid,
/// valley creases dashed, flat creases dotted; each cut edge carries its
/// glue mark on both sides. Overlapping faces are tinted on a warning layer.
inline std::string export_svg(const Net& net, const TriMesh& mesh, const SvgOptions& opt = {}) {
  if (net.empty()) throw ValidationError("export_svg: empty net");
  if (!(opt.mm_per_unit > 0)) throw ValidationError("export_svg: scale must be positive");
  Vec2 lo = net.faces[0].corners[0], hi = lo;
  for (const auto& f : net.faces) {
    for (const auto& c : f.corners) lo = lo.cwiseMin(c), hi = hi.cwiseMax(c);
  }
  const double s = opt.mm_per_unit, m = opt.margin_mm;
  const double width = (hi.x() - lo.x()) * s + 2 * m, height = (hi.y() - lo.y()) * s + 2 * m;
  // y flipped so the net reads with the surface's outside facing the viewer
  auto X = [&](const Vec2& p) { return (p.x() - lo.x()) * s + m; };
  auto Y = [&](const Vec2& p) { return (hi.y() - p.y()) * s + m; };
  auto corner = [&](int face, int v) {
    const auto& nfc = net.placed(face);
    return nfc.corners[std::size_t(detail::corner_of(mesh.faces()[std::size_t(face)], v))];
  };
  auto line = [&](const Vec2& a, const Vec2& b, const std::string& attrs) {
    return "<line x1=\"" + detail::fmt(X(a)) + "\" y1=\"" + detail::fmt(Y(a)) + "\" x2=\"" + detail::fmt(X(b)) +
           "\" y2=\"" + detail::fmt(Y(b)) + "\" " + attrs + "/>\n";
  };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << detail::fmt(width) << "mm\" height=\""
     << detail::fmt(height) << "mm\" viewBox=\"0 0 " << detail::fmt(width) << " " << detail::fmt(height) << "\">\n";
  os << "<g id=\"faces\" fill=\"#f7f3e8\" stroke=\"none\">\n";
  for (const auto& f : net.faces) {
    os << "<polygon data-face=\"" << f.face << "\" points=\"";
    for (std::size_t k = 0; k < 3; ++k) os << (k ? " " : "") << detail::fmt(X(f.corners[k])) << "," << detail::fmt(Y(f.corners[k]));
    os << "\"/>\n";
  }
  os << "</g>\n";
  if (!net.overlaps.empty()) {
    std::set<int> bad;
    for (const auto& o : net.overlaps) bad.insert(o.f1), bad.insert(o.f2);
    os << "<g id=\"overlaps\" fill=\"#ff0000\" fill-opacity=\"0.35\" stroke=\"none\">\n";
    for (int fi : bad) {
      const auto& f = net.placed(fi);
      os << "<polygon data-face=\"" << fi << "\" points=\"";
      for (std::size_t k = 0; k < 3; ++k) os << (k ? " " : "") << detail::fmt(X(f.corners[k])) << "," << detail::fmt(Y(f.corners[k]));
      os << "\"/>\n";
    }
    os << "</g>\n";
  }
  const double stroke = 0.3;
  os << "<g id=\"creases\" stroke=\"#000000\" stroke-width=\"" << detail::fmt(stroke) << "\" fill=\"none\">\n";
  for (const auto& c : net.creases) {
    const Vec2 a = corner(c.f1, c.edge.a), b = corner(c.f1, c.edge.b);
    std::string attrs = "class=\"" + to_string(c.dihedral.fold) + "\"";
    if (c.dihedral.fold == Fold::Valley) attrs += " stroke-dasharray=\"3,2\"";
    if (c.dihedral.fold == Fold::Flat) attrs += " stroke-dasharray=\"0.5,1.5\" stroke-opacity=\"0.5\"";
    os << line(a, b, attrs);
  }
  os << "</g>\n";
  os << "<g id=\"outline\" stroke=\"#000000\" stroke-width=\"" << detail::fmt(2 * stroke) << "\" fill=\"none\">\n";
  for (const auto& e : net.boundary) {
    const int fi = mesh.edge_faces().at(e).front();
    os << line(corner(fi, e.a), corner(fi, e.b), "class=\"boundary\"");
  }
  for (const auto& g : net.cuts) {
    for (int fi : {g.f1, g.f2}) {
      os << line(corner(fi, g.edge.a), corner(fi, g.edge.b), "class=\"cut " + to_string(g.dihedral.fold) + "\"");
    }
  }
  os << "</g>\n";
  os << "<g id=\"glue\">\n";
  for (const auto& g : net.cuts) {
    for (int fi : {g.f1, g.f2}) {
      const Vec2 a = corner(fi, g.edge.a), b = corner(fi, g.edge.b);
      const auto& nfc = net.placed(fi);
      const Vec2 centroid = (nfc.corners[0] + nfc.corners[1] + nfc.corners[2]) / 3.0;
      const Vec2 mid = 0.5 * (a + b);
      const Vec2 at = mid + 0.3 * (centroid - mid);
      const double r = std::min(2.5, std::max(0.8, 0.08 * (b - a).norm() * s));
      os << "<g data-mark=\"" << g.id << "\">" << detail::glue_glyph(g.symbol, g.color, X(at), Y(at), r);
      if (std::size_t(g.id) >= glue_symbols().size() * glue_colors().size()) {
        os << "<text x=\"" << detail::fmt(X(at) + r) << "\" y=\"" << detail::fmt(Y(at) - r) << "\" font-size=\""
           << detail::fmt(1.6 * r) << "\" fill=\"" << g.color << "\">" << g.id << "</text>";
      }
      os << "</g>\n";
    }
  }
  os << "</g>\n";
  if (opt.face_numbers) {
    os << "<g id=\"labels\" font-family=\"sans-serif\" font-size=\"2.5\" fill=\"#555555\" text-anchor=\"middle\">\n";
    for (const auto& f : net.faces) {
      const Vec2 c = (f.corners[0] + f.corners[1] + f.corners[2]) / 3.0;
      os << "<text x=\"" << detail::fmt(X(c)) << "\" y=\"" << detail::fmt(Y(c)) << "\">" << f.face << "</text>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline json net_to_json(const Net& net) {
  json faces = json::array();
  for (const auto& f : net.faces) {
    json c = json::array();
    for (const auto& p : f.corners) c.push_back({p.x(), p.y()});
    faces.push_back({{"face", f.face}, {"parent", f.parent}, {"corners", c}});
  }
  json creases = json::array();
  for (const auto& c : net.creases) {
    creases.push_back({{"edge", {c.edge.a, c.edge.b}}, {"faces", {c.f1, c.f2}}, {"fold", to_string(c.dihedral.fold)},
                       {"dihedral", c.dihedral.angle}});
  }
  json cuts = json::array();
  for (const auto& g : net.cuts) {
    cuts.push_back({{"edge", {g.edge.a, g.edge.b}}, {"faces", {g.f1, g.f2}}, {"id", g.id}, {"symbol", g.symbol},
                    {"color", g.color}, {"fold", to_string(g.dihedral.fold)}, {"dihedral", g.dihedral.angle}});
  }
  json overlaps = json::array();
  for (const auto& o : net.overlaps) overlaps.push_back({{"faces", {o.f1, o.f2}}, {"area", o.area}});
  return {{"root", net.root}, {"faces", faces}, {"creases", creases}, {"cuts", cuts}, {"overlaps", overlaps}};
}

// Frames

inline json driver_to_json(const DriverSpec& d) {
  if (const auto* p = std::get_if<DistanceDriver>(&d)) return {{"type", "distance"}, {"vertices", {p->i, p->j}}};
  const auto& q = std::get<DihedralDriver>(d);
  return {{"type", "dihedral"}, {"vertices", {q.a, q.b, q.c, q.d}}};
}

inline DriverSpec driver_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.contains("vertices") || !j["vertices"].is_array()) {
    throw ValidationError("driver needs 'type' and 'vertices'");
  }
  const std::string type = j["type"].get<std::string>();
  std::vector<int> v;
  for (const auto& x : j["vertices"]) {
    if (!x.is_number_integer()) throw ValidationError("driver vertices must be integers");
    v.push_back(x.get<int>());
  }
  if (type == "distance" && v.size() == 2) return DistanceDriver{v[0], v[1]};
  if (type == "dihedral" && v.size() == 4) return DihedralDriver{v[0], v[1], v[2], v[3]};
  throw ValidationError("unknown driver '" + type + "' or wrong vertex count");
}

namespace detail {

// JSON has no NaN; absent diagnostics are written as null.
inline json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double num_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline json frame_to_json(const Frame& f) {
  json phantom = json::array();
  for (double d : f.diag.phantom) phantom.push_back(detail::num(d));
  return {{"t", detail::num(f.t())},
          {"driver", f.driver},
          {"vertices", points_to_json(f.vertices)},
          {"diag",
           {{"edge_err", detail::num(f.diag.edge_err)},
            {"volume", detail::num(f.diag.volume)},
            {"sym_residual", detail::num(f.diag.sym_residual)},
            {"min_sv", detail::num(f.diag.min_sv)},
            {"phantom", phantom},
            {"bifurcation", f.diag.bifurcation}}}};
}

inline Frame frame_from_json(const json& j) {
  if (!j.is_object() || !j.contains("vertices")) throw ValidationError("frame needs 'vertices'");
  Frame f;
  if (j.contains("driver")) {
    for (const auto& v : j["driver"]) f.driver.push_back(detail::num_from(v));
  } else if (j.contains("t")) {
    f.driver.push_back(detail::num_from(j["t"]));
  }
  f.vertices = points_from_json(j["vertices"]);
  if (j.contains("diag")) {
    const auto& d = j["diag"];
    f.diag.edge_err = detail::num_from(d.value("edge_err", json(0.0)));
    f.diag.volume = detail::num_from(d.value("volume", json(nullptr)));
    f.diag.sym_residual = detail::num_from(d.value("sym_residual", json(nullptr)));
    f.diag.min_sv = detail::num_from(d.value("min_sv", json(0.0)));
    for (const auto& p : d.value("phantom", json::array())) f.diag.phantom.push_back(detail::num_from(p));
    f.diag.bifurcation = d.value("bifurcation", false);
  }
  return f;
}

/// FlexPath as the frames document. `mesh`, when given, is embedded so the
/// file is self-contained for viewers.
inline json path_to_json(const FlexPath& path, const TriMesh* mesh = nullptr) {
  json drivers = json::array();
  for (const auto& d : path.drivers) drivers.push_back(driver_to_json(d));
  json pairs = json::array();
  for (const auto& e : path.monitored_pairs) pairs.push_back({e.a, e.b});
  json frames = json::array();
  for (const auto& f : path.frames) frames.push_back(frame_to_json(f));
  json j{{"driver", drivers},
         {"monitored_pairs", pairs},
         {"status", path.status == PathStatus::Complete ? "complete" : "locked"},
         {"reason", path.reason},
         {"frames", frames}};
  if (mesh) {
    json faces = json::array();
    for (const auto& f : mesh->faces()) faces.push_back({f[0], f[1], f[2]});
    json labels = json::object();
    for (const auto& [name, idx] : mesh->labels()) labels[name] = idx;
    j["mesh"] = {{"faces", faces}, {"labels", labels}};
  }
  return j;
}

inline FlexPath path_from_json(const json& j) {
  if (!j.is_object() || !j.contains("frames") || !j["frames"].is_array()) throw ValidationError("path JSON needs 'frames'");
  FlexPath p;
  for (const auto& d : j.value("driver", json::array())) p.drivers.push_back(driver_from_json(d));
  for (const auto& e : j.value("monitored_pairs", json::array())) p.monitored_pairs.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
  p.status = j.value("status", std::string("complete")) == "locked" ? PathStatus::Locked : PathStatus::Complete;
  p.reason = j.value("reason", std::string());
  for (const auto& f : j["frames"]) p.frames.push_back(frame_from_json(f));
  return p;
}

/// Mesh embedded in a frames document, with the coordinates of `frame`.
inline TriMesh path_mesh(const json& j, int frame = 0) {
  if (!j.contains("mesh")) throw ValidationError("path JSON carries no mesh");
  const auto& frames = j.at("frames");
  if (frame < 0 || frame >= int(frames.size())) throw ValidationError("frame index out of range");
  json m = j["mesh"];
  m["vertices"] = frames[std::size_t(frame)].at("vertices");
  return mesh_from_json(m);
}

inline std::string export_frames(const FlexPath& path, const TriMesh* mesh = nullptr) {
  return path_to_json(path, mesh).dump() + "\n";
}

}  // namespace flexpoly
