#pragma once

// Triangle-triangle intersection, per-frame self-intersection reports with
// an AABB-tree filter, path embeddedness and a seeded low-discrepancy
// parameter search for intersection-free flex ranges.

#include "flexpoly/catalog.hpp"

namespace flexpoly {

enum class ContactKind { Transversal, Coplanar };

struct Contact {
  ContactKind kind = ContactKind::Transversal;
  /// Segment endpoints (one point for a point contact) or, when coplanar,
  /// the overlap polygon.
  std::vector<Vec3> points;
  /// For transversal contacts: whether each endpoint is where an edge of the
  /// first triangle crosses the second (false: an edge of the second).
  std::vector<bool> from_first;
  double depth = 0;  // how far the shallower triangle pokes through the other's plane

  double length() const { return points.size() < 2 ? 0.0 : (points.front() - points.back()).norm(); }
};

using Triangle = std::array<Vec3, 3>;

namespace detail {

inline double tri_scale(const Triangle& t) {
  return std::max({(t[0] - t[1]).norm(), (t[1] - t[2]).norm(), (t[2] - t[0]).norm()});
}

/// The piece of triangle `t` lying on the plane whose signed distances are
/// `d` (already snapped: |d| <= eps set to 0), as points.
inline std::vector<Vec3> plane_section(const Triangle& t, const std::array<double, 3>& d) {
  std::vector<Vec3> pts;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    if (d[std::size_t(i)] == 0.0) pts.push_back(t[std::size_t(i)]);
    if (d[std::size_t(i)] * d[std::size_t(j)] < 0.0) {
      const double s = d[std::size_t(i)] / (d[std::size_t(i)] - d[std::size_t(j)]);
      pts.push_back(t[std::size_t(i)] + s * (t[std::size_t(j)] - t[std::size_t(i)]));
    }
  }
  return pts;
}

inline std::array<double, 3> signed_distances(const Triangle& t, const Vec3& n, const Vec3& o, double eps) {
  std::array<double, 3> d{};
  for (std::size_t i = 0; i < 3; ++i) {
    d[i] = (t[i] - o).dot(n);
    if (std::abs(d[i]) <= eps) d[i] = 0.0;
  }
  return d;
}

/// Largest distance of a vertex on the minority side of the plane.
inline double poke_depth(const std::array<double, 3>& d) {
  int pos = 0, neg = 0;
  double dp = 0, dn = 0;
  for (double x : d) {
    if (x > 0) ++pos, dp = std::max(dp, x);
    if (x < 0) ++neg, dn = std::max(dn, -x);
  }
  if (pos == 0 || neg == 0) return 0.0;
  return pos < neg ? dp : (neg < pos ? dn : std::min(dp, dn));
}

/// Clips convex polygon `poly` against triangle `t` (both in 2D), keeping
/// points within `eps` of the closed triangle.
inline std::vector<Vec2> clip_polygon(std::vector<Vec2> poly, const std::array<Vec2, 3>& t, double eps) {
  double orient = (t[1] - t[0]).x() * (t[2] - t[0]).y() - (t[1] - t[0]).y() * (t[2] - t[0]).x();
  const double sgn = orient > 0 ? 1.0 : -1.0;
  for (int e = 0; e < 3 && !poly.empty(); ++e) {
    const Vec2 a = t[std::size_t(e)], b = t[std::size_t((e + 1) % 3)];
    const Vec2 dir = b - a;
    const double len = dir.norm();
    auto side = [&](const Vec2& p) { return sgn * (dir.x() * (p - a).y() - dir.y() * (p - a).x()) / len; };
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const Vec2& p = poly[i];
      const Vec2& q = poly[(i + 1) % poly.size()];
      const double sp = side(p), sq = side(q);
      if (sp >= -eps) out.push_back(p);
      if ((sp >= -eps) != (sq >= -eps)) {
        const double s = (sp + eps) / (sp - sq);
        out.push_back(p + s * (q - p));
      }
    }
    poly = std::move(out);
  }
  return poly;
}

}  // namespace detail

/// Intersection of two closed triangles. `eps` is an absolute length: plane
/// distances below it count as zero. A negative eps means 1e-9 times the
/// larger triangle's longest side.
inline std::optional<Contact> intersect_triangles(const Triangle& t1, const Triangle& t2, double eps = -1) {
  const double scale = std::max(detail::tri_scale(t1), detail::tri_scale(t2));
  if (eps < 0) eps = 1e-9 * scale;
  const Vec3 n1 = (t1[1] - t1[0]).cross(t1[2] - t1[0]);
  const Vec3 n2 = (t2[1] - t2[0]).cross(t2[2] - t2[0]);
  const double floor = std::max(eps * eps, 1e-300);
  if (0.5 * n1.norm() <= floor || 0.5 * n2.norm() <= floor) {
    throw DegenerateError("intersect_triangles: degenerate (zero-area) triangle");
  }
  const Vec3 u1 = n1.normalized(), u2 = n2.normalized();
  const auto d2 = detail::signed_distances(t2, u1, t1[0], eps);  // t2 against plane 1
  const auto d1 = detail::signed_distances(t1, u2, t2[0], eps);
  auto same_side = [](const std::array<double, 3>& d) {
    return (d[0] > 0 && d[1] > 0 && d[2] > 0) || (d[0] < 0 && d[1] < 0 && d[2] < 0);
  };
  if (same_side(d1) || same_side(d2)) return std::nullopt;

  const bool coplanar = d2[0] == 0 && d2[1] == 0 && d2[2] == 0;
  if (coplanar) {
    // project onto the dominant plane of t1's normal
    int drop = 0;
    u1.cwiseAbs().maxCoeff(&drop);
    const int ia = (drop + 1) % 3, ib = (drop + 2) % 3;
    auto to2 = [&](const Vec3& p) { return Vec2(p[ia], p[ib]); };
    std::array<Vec2, 3> a{to2(t1[0]), to2(t1[1]), to2(t1[2])};
    std::vector<Vec2> poly{to2(t2[0]), to2(t2[1]), to2(t2[2])};
    poly = detail::clip_polygon(poly, a, eps);
    if (poly.empty()) return std::nullopt;
    Contact c;
    c.kind = ContactKind::Coplanar;
    // lift back onto plane 1
    for (const auto& q : poly) {
      Vec3 p = Vec3::Zero();
      p[ia] = q.x();
      p[ib] = q.y();
      p[drop] = t1[0][drop] - (u1[ia] * (q.x() - t1[0][ia]) + u1[ib] * (q.y() - t1[0][ib])) / u1[drop];
      c.points.push_back(p);
    }
    return c;
  }

  const auto s1 = detail::plane_section(t1, d1);  // t1 on plane 2
  const auto s2 = detail::plane_section(t2, d2);
  if (s1.empty() || s2.empty()) return std::nullopt;
  Vec3 dir = u1.cross(u2);
  if (dir.norm() < 1e-15) return std::nullopt;  // parallel planes, not coplanar
  dir.normalize();
  auto interval = [&](const std::vector<Vec3>& s) {
    std::pair<Vec3, Vec3> r{s.front(), s.front()};
    for (const auto& p : s) {
      if (p.dot(dir) < r.first.dot(dir)) r.first = p;
      if (p.dot(dir) > r.second.dot(dir)) r.second = p;
    }
    return r;
  };
  const auto [lo1, hi1] = interval(s1);
  const auto [lo2, hi2] = interval(s2);
  const double a = std::max(lo1.dot(dir), lo2.dot(dir));
  const double b = std::min(hi1.dot(dir), hi2.dot(dir));
  if (a > b + eps) return std::nullopt;
  Contact c;
  const bool lo_first = lo1.dot(dir) >= lo2.dot(dir);
  const bool hi_first = hi1.dot(dir) <= hi2.dot(dir);
  Vec3 p = lo_first ? lo1 : lo2, q = hi_first ? hi1 : hi2;
  if (a > b) q = p;  // touching within eps
  c.points = {p, q};
  c.from_first = {lo_first, hi_first};
  if ((p - q).norm() <= eps) {
    c.points.pop_back();
    c.from_first.pop_back();
  } else if (q[0] < p[0] || (q[0] == p[0] && (q[1] < p[1] || (q[1] == p[1] && q[2] < p[2])))) {
    // canonical endpoint order so the answer does not depend on argument order
    std::swap(c.points[0], c.points[1]);
    c.from_first = {hi_first, lo_first};
  }
  c.depth = std::min(detail::poke_depth(d1), detail::poke_depth(d2));
  return c;
}

// ---------------------------------------------------------------------------
// Mesh reports

enum class ContactClass { VertexThroughFace, EdgeThroughFace, CoplanarOverlap };

inline std::string to_string(ContactClass c) {
  switch (c) {
    case ContactClass::VertexThroughFace: return "vertex-through-face";
    case ContactClass::EdgeThroughFace: return "edge-through-face";
    default: return "coplanar-overlap";
  }
}

struct FacePair {
  int f1 = 0, f2 = 0;
  Contact contact;
  ContactClass classification = ContactClass::EdgeThroughFace;
};

struct IntersectionReport {
  int frame = 0;
  std::vector<FacePair> pairs;     // genuine crossings
  std::vector<FacePair> touching;  // contacts shallower than eps
  double eps = 0;
  bool is_embedded() const { return pairs.empty(); }
  double worst_depth() const {
    double d = 0;
    for (const auto& p : pairs) d = std::max(d, p.contact.depth);
    return d;
  }
};

struct CollisionOptions {
  double eps_rel = 1e-9;  // relative to the bounding-box diameter
  bool use_bvh = true;
};

namespace detail {

struct BvhNode {
  BoundingBox box;
  int left = -1, right = -1;
  std::size_t count = 0;
  std::vector<int> faces;  // leaves only
};

inline int build_bvh(std::vector<BvhNode>& nodes, std::vector<int> faces, const std::vector<BoundingBox>& boxes) {
  BvhNode node;
  for (int f : faces) {
    node.box.extend(boxes[std::size_t(f)].lo);
    node.box.extend(boxes[std::size_t(f)].hi);
  }
  node.count = faces.size();
  const int id = int(nodes.size());
  nodes.push_back(node);
  if (faces.size() <= 4) {
    nodes[std::size_t(id)].faces = std::move(faces);
    return id;
  }
  const Vec3 ext = node.box.hi - node.box.lo;
  int axis = 0;
  ext.maxCoeff(&axis);
  auto centre = [&](int f) { return boxes[std::size_t(f)].lo[axis] + boxes[std::size_t(f)].hi[axis]; };
  const auto mid = faces.begin() + std::ptrdiff_t(faces.size() / 2);
  std::nth_element(faces.begin(), mid, faces.end(), [&](int a, int b) {
    return centre(a) < centre(b) || (centre(a) == centre(b) && a < b);
  });
  std::vector<int> l(faces.begin(), mid), r(mid, faces.end());
  const int li = build_bvh(nodes, std::move(l), boxes);
  const int ri = build_bvh(nodes, std::move(r), boxes);
  nodes[std::size_t(id)].left = li;
  nodes[std::size_t(id)].right = ri;
  return id;
}

inline void bvh_pairs(const std::vector<BvhNode>& nodes, int a, int b, double pad,
                      const std::vector<BoundingBox>& boxes, std::set<std::pair<int, int>>& out) {
  const auto& na = nodes[std::size_t(a)];
  const auto& nb = nodes[std::size_t(b)];
  if (!na.box.overlaps(nb.box, pad)) return;
  const bool leaf_a = na.left < 0, leaf_b = nb.left < 0;
  if (leaf_a && leaf_b) {
    for (int f : na.faces) {
      for (int g : nb.faces) {
        if (f == g) continue;
        if (boxes[std::size_t(f)].overlaps(boxes[std::size_t(g)], pad)) out.insert({std::min(f, g), std::max(f, g)});
      }
    }
    return;
  }
  if (a == b) {
    bvh_pairs(nodes, na.left, na.left, pad, boxes, out);
    bvh_pairs(nodes, na.right, na.right, pad, boxes, out);
    bvh_pairs(nodes, na.left, na.right, pad, boxes, out);
    return;
  }
  if (!leaf_a && (leaf_b || na.count >= nb.count)) {
    bvh_pairs(nodes, na.left, b, pad, boxes, out);
    bvh_pairs(nodes, na.right, b, pad, boxes, out);
  } else {
    bvh_pairs(nodes, a, nb.left, pad, boxes, out);
    bvh_pairs(nodes, a, nb.right, pad, boxes, out);
  }
}

inline bool share_vertex(const Face& f, const Face& g) {
  for (int v : f) {
    if (v == g[0] || v == g[1] || v == g[2]) return true;
  }
  return false;
}

inline ContactClass classify(const Contact& c) {
  if (c.kind == ContactKind::Coplanar) return ContactClass::CoplanarOverlap;
  // both ends made by edges of one triangle: their shared corner pokes through
  if (c.from_first.size() == 2 && c.from_first[0] == c.from_first[1]) return ContactClass::VertexThroughFace;
  return c.from_first.size() == 1 ? ContactClass::VertexThroughFace : ContactClass::EdgeThroughFace;
}

inline double polygon_area(const std::vector<Vec3>& poly) {
  Vec3 s = Vec3::Zero();
  for (std::size_t i = 0; i + 2 < poly.size(); ++i) s += (poly[i + 1] - poly[0]).cross(poly[i + 2] - poly[0]);
  return 0.5 * s.norm();
}

}  // namespace detail

/// Candidate non-adjacent face pairs whose padded boxes overlap.
inline std::vector<std::pair<int, int>> candidate_pairs(const TriMesh& mesh, std::span<const Vec3> x, double pad,
                                                        bool use_bvh) {
  std::vector<BoundingBox> boxes;
  for (const auto& f : mesh.faces()) {
    BoundingBox b;
    for (int v : f) b.extend(x[std::size_t(v)]);
    boxes.push_back(b);
  }
  std::set<std::pair<int, int>> found;
  const int n = mesh.num_faces();
  if (use_bvh && n > 0) {
    std::vector<int> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    std::vector<detail::BvhNode> nodes;
    const int root = detail::build_bvh(nodes, std::move(all), boxes);
    detail::bvh_pairs(nodes, root, root, pad, boxes, found);
  } else {
    for (int f = 0; f < n; ++f) {
      for (int g = f + 1; g < n; ++g) {
        if (boxes[std::size_t(f)].overlaps(boxes[std::size_t(g)], pad)) found.insert({f, g});
      }
    }
  }
  std::vector<std::pair<int, int>> out;
  for (const auto& [f, g] : found) {
    if (!detail::share_vertex(mesh.faces()[std::size_t(f)], mesh.faces()[std::size_t(g)])) out.push_back({f, g});
  }
  return out;
}

/// Crossings between faces that share no vertex. Contacts whose depth or
/// extent is within eps (eps_rel times the diameter) are listed as touching
/// and do not make the surface non-embedded.
inline IntersectionReport self_intersections(const TriMesh& mesh, std::span<const Vec3> x,
                                             const CollisionOptions& opt = {}, int frame = 0) {
  if (int(x.size()) != mesh.num_vertices()) throw ValidationError("self_intersections: coordinate count mismatch");
  IntersectionReport rep;
  rep.frame = frame;
  rep.eps = opt.eps_rel * diameter(x);
  for (const auto& [f, g] : candidate_pairs(mesh, x, rep.eps, opt.use_bvh)) {
    const auto& a = mesh.faces()[std::size_t(f)];
    const auto& b = mesh.faces()[std::size_t(g)];
    const Triangle t1{x[std::size_t(a[0])], x[std::size_t(a[1])], x[std::size_t(a[2])]};
    const Triangle t2{x[std::size_t(b[0])], x[std::size_t(b[1])], x[std::size_t(b[2])]};
    const auto c = intersect_triangles(t1, t2, rep.eps);
    if (!c) continue;
    FacePair fp{f, g, *c, detail::classify(*c)};
    bool shallow;
    if (c->kind == ContactKind::Coplanar) {
      shallow = detail::polygon_area(c->points) <= rep.eps * std::max(detail::tri_scale(t1), detail::tri_scale(t2));
    } else {
      shallow = c->depth <= rep.eps || c->length() <= rep.eps;
    }
    (shallow ? rep.touching : rep.pairs).push_back(std::move(fp));
  }
  return rep;
}

inline IntersectionReport self_intersections(const TriMesh& mesh, const CollisionOptions& opt = {}) {
  return self_intersections(mesh, mesh.vertices(), opt);
}

// ---------------------------------------------------------------------------
// Paths

struct PathEmbedding {
  std::vector<IntersectionReport> reports;
  std::vector<bool> embedded;
  int embedded_frames = 0;
  // longest run of consecutive embedded frames (indices inclusive; -1 if none)
  int best_first = -1, best_last = -1;
  double range_lo = 0, range_hi = 0;  // driver values across that run
  double worst_depth = 0;

  double embedded_range() const { return best_first < 0 ? 0.0 : range_hi - range_lo; }
  double embedded_fraction() const { return embedded.empty() ? 0.0 : double(embedded_frames) / double(embedded.size()); }
};

inline PathEmbedding path_embedding(const FlexPath& path, const TriMesh& mesh, const CollisionOptions& opt = {}) {
  PathEmbedding out;
  int run_start = -1;
  for (std::size_t k = 0; k < path.frames.size(); ++k) {
    auto rep = self_intersections(mesh, path.frames[k].vertices, opt, int(k));
    const bool ok = rep.is_embedded();
    out.worst_depth = std::max(out.worst_depth, rep.worst_depth());
    out.embedded.push_back(ok);
    out.reports.push_back(std::move(rep));
    if (ok) {
      ++out.embedded_frames;
      if (run_start < 0) run_start = int(k);
      const int len = int(k) - run_start;
      if (out.best_first < 0 || len > out.best_last - out.best_first) {
        out.best_first = run_start;
        out.best_last = int(k);
      }
    } else {
      run_start = -1;
    }
  }
  if (out.best_first >= 0) {
    const double a = path.frames[std::size_t(out.best_first)].t();
    const double b = path.frames[std::size_t(out.best_last)].t();
    out.range_lo = std::min(a, b);
    out.range_hi = std::max(a, b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameter search

/// The i-th point of the Halton sequence in the given prime bases.
inline std::vector<double> halton_point(std::uint64_t index, std::size_t dims) {
  static constexpr std::array<int, 16> primes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  if (dims > primes.size()) throw ValidationError("search: at most 16 parameters can be scanned");
  std::vector<double> p(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    double f = 1.0, r = 0.0;
    for (std::uint64_t i = index; i > 0; i /= std::uint64_t(primes[d])) {
      f /= primes[d];
      r += f * double(i % std::uint64_t(primes[d]));
    }
    p[d] = r;
  }
  return p;
}

struct ParamRange {
  double lo = 0, hi = 0;
};
using ParamBox = std::map<std::string, ParamRange>;

struct SearchOptions {
  int budget = 16;
  std::uint64_t seed = 1;
  int frames = 40;
  CollisionOptions collision;
};

struct ScanSample {
  int index = 0;
  ParamMap params;
  bool built = false;
  std::string error;
  double range_lo = 0, range_hi = 0;  // traced driver range
  double embedded_range = 0;
  double embedded_fraction = 0;
  double worst_depth = 0;
};

struct EmbeddingScan {
  std::string model;
  ParamBox box;
  std::uint64_t seed = 1;
  std::vector<ScanSample> samples;  // in sampling order
  std::vector<int> ranking;         // sample indices, best embedded range first
  std::optional<Model> best_model;
  std::optional<FlexPath> best_path;
};

/// Builds, traces and checks `budget` samples of the catalog model over the
/// box. The sample points are a Halton sequence shifted modulo 1 by a
/// seeded random offset (a Cranley-Patterson rotation), so equal seeds give
/// equal scans.
inline EmbeddingScan search_embedding(const std::string& model, const ParamBox& box, const SearchOptions& opt = {}) {
  const auto& spec = model_spec(model);
  if (opt.budget < 1) throw ValidationError("search: budget must be at least 1");
  for (const auto& [name, r] : box) {
    if (!(r.lo <= r.hi)) throw ValidationError("search: empty range for '" + name + "'");
    resolve_params(spec, {{name, r.lo}});
    resolve_params(spec, {{name, r.hi}});
  }
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> shift;
  for (std::size_t d = 0; d < box.size(); ++d) shift.push_back(unit(rng));

  EmbeddingScan scan;
  scan.model = model;
  scan.box = box;
  scan.seed = opt.seed;
  double best = -1;
  for (int i = 0; i < opt.budget; ++i) {
    ScanSample s;
    s.index = i;
    const auto h = halton_point(std::uint64_t(i) + 1, box.size());
    std::size_t d = 0;
    for (const auto& [name, r] : box) {
      const double u = std::fmod(h[d] + shift[d], 1.0);
      s.params[name] = r.lo + u * (r.hi - r.lo);
      ++d;
    }
    try {
      const auto m = catalog(model, s.params);
      const auto setup = model_drivers(model, m);
      const auto prob = make_problem(m, setup.drivers, setup.pinned);
      const auto path = trace_full_range(prob, model_mesh(m).vertices(), opt.frames);
      const auto emb = path_embedding(path, model_mesh(m), opt.collision);
      s.built = true;
      s.range_lo = path.frames.front().t();
      s.range_hi = path.frames.back().t();
      s.embedded_range = emb.embedded_range();
      s.embedded_fraction = emb.embedded_fraction();
      s.worst_depth = emb.worst_depth;
      if (s.embedded_range > best) {
        best = s.embedded_range;
        scan.best_model = m;
        scan.best_path = path;
      }
    } catch (const std::exception& e) {
      s.error = e.what();
    }
    scan.samples.push_back(std::move(s));
  }
  scan.ranking.resize(scan.samples.size());
  std::iota(scan.ranking.begin(), scan.ranking.end(), 0);
  std::stable_sort(scan.ranking.begin(), scan.ranking.end(), [&](int a, int b) {
    const auto& x = scan.samples[std::size_t(a)];
    const auto& y = scan.samples[std::size_t(b)];
    if (x.built != y.built) return x.built;
    return x.embedded_range > y.embedded_range;
  });
  if (std::none_of(scan.samples.begin(), scan.samples.end(), [](const ScanSample& s) { return s.built; })) {
    throw SolverError("search failed: no sample could be built and traced (first error: " +
                      scan.samples.front().error + ")");
  }
  return scan;
}

}  // namespace flexpoly
