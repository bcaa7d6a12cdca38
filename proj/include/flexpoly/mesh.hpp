#pragma once

// Indexed triangle mesh with derived edges, plus the metric quantities the
// rest of the toolkit is built on (edge lengths, signed volume, counts).

#include "flexpoly/geom.hpp"

#include <array>
#include <compare>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace flexpoly {

using Face = std::array<int, 3>;

/// Undirected vertex pair, stored with a < b.
struct Edge {
  int a = 0;
  int b = 0;

  Edge() = default;
  Edge(int u, int v) : a(std::min(u, v)), b(std::max(u, v)) {}

  bool has(int v) const { return a == v || b == v; }
  int other(int v) const { return v == a ? b : a; }
  auto operator<=>(const Edge&) const = default;
};

using EdgeLengthMap = std::map<Edge, double>;

class TriMesh {
 public:
  TriMesh() = default;

  TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces,
          std::map<std::string, int> labels = {})
      : vertices_(std::move(vertices)), faces_(std::move(faces)), labels_(std::move(labels)) {
    validate();
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::map<std::string, int>& labels() const { return labels_; }
  int num_vertices() const { return int(vertices_.size()); }
  int num_faces() const { return int(faces_.size()); }
  const Vec3& vertex(int i) const { return vertices_.at(std::size_t(i)); }

  /// Same connectivity, new coordinates (e.g. a traced frame).
  TriMesh with_vertices(std::vector<Vec3> coords) const {
    if (coords.size() != vertices_.size()) {
      throw ValidationError("with_vertices: expected " + std::to_string(vertices_.size()) +
                            " coordinates, got " + std::to_string(coords.size()));
    }
    TriMesh m = *this;
    m.vertices_ = std::move(coords);
    for (const auto& p : m.vertices_) {
      if (!is_finite(p)) throw ValidationError("vertex coordinate is not finite");
    }
    return m;
  }

  /// Derived undirected edges, sorted.
  std::vector<Edge> edges() const {
    std::set<Edge> s;
    for (const auto& f : faces_) {
      for (int k = 0; k < 3; ++k) s.emplace(f[k], f[(k + 1) % 3]);
    }
    return {s.begin(), s.end()};
  }

  /// Faces incident to each edge.
  std::map<Edge, std::vector<int>> edge_faces() const {
    std::map<Edge, std::vector<int>> m;
    for (int fi = 0; fi < num_faces(); ++fi) {
      const auto& f = faces_[std::size_t(fi)];
      for (int k = 0; k < 3; ++k) m[Edge(f[k], f[(k + 1) % 3])].push_back(fi);
    }
    return m;
  }

  bool has_edge(int u, int v) const {
    for (const auto& f : faces_) {
      for (int k = 0; k < 3; ++k) {
        if (Edge(f[k], f[(k + 1) % 3]) == Edge(u, v)) return true;
      }
    }
    return false;
  }

  /// Index of the face traversing u -> v, if any.
  std::optional<int> face_with_directed_edge(int u, int v) const {
    for (int fi = 0; fi < num_faces(); ++fi) {
      const auto& f = faces_[std::size_t(fi)];
      for (int k = 0; k < 3; ++k) {
        if (f[k] == u && f[(k + 1) % 3] == v) return fi;
      }
    }
    return std::nullopt;
  }

  std::vector<Edge> boundary_edges() const {
    std::vector<Edge> out;
    for (const auto& [e, fs] : edge_faces()) {
      if (fs.size() == 1) out.push_back(e);
    }
    return out;
  }

  bool is_closed() const { return !faces_.empty() && boundary_edges().empty(); }

  /// Boundary cycles oriented like the hole they surround: for consecutive
  /// (u, v) the mesh itself traverses v -> u.
  std::vector<std::vector<int>> boundary_loops() const {
    std::map<int, int> next;
    for (const auto& f : faces_) {
      for (int k = 0; k < 3; ++k) {
        const int u = f[k], v = f[(k + 1) % 3];
        if (!face_with_directed_edge(v, u)) {
          // boundary edge traversed u -> v by the mesh; the hole runs v -> u
          if (next.count(v)) throw ValidationError("boundary is pinched at vertex " + std::to_string(v));
          next[v] = u;
        }
      }
    }
    std::vector<std::vector<int>> loops;
    std::set<int> seen;
    for (const auto& [start, unused] : next) {
      if (seen.count(start)) continue;
      std::vector<int> loop;
      int v = start;
      while (!seen.count(v)) {
        seen.insert(v);
        loop.push_back(v);
        v = next.at(v);
      }
      loops.push_back(std::move(loop));
    }
    return loops;
  }

  /// Connected components of the face-adjacency graph (by shared edges).
  int face_components() const {
    std::vector<int> parent(faces_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[std::size_t(x)] != x) x = parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
      return x;
    };
    for (const auto& [e, fs] : edge_faces()) {
      for (std::size_t i = 1; i < fs.size(); ++i) parent[std::size_t(find(fs[0]))] = find(fs[i]);
    }
    std::set<int> roots;
    for (int i = 0; i < num_faces(); ++i) roots.insert(find(i));
    return int(roots.size());
  }

  std::optional<int> find_label(const std::string& name) const {
    auto it = labels_.find(name);
    if (it == labels_.end()) return std::nullopt;
    return it->second;
  }

  /// Label of a vertex, or its decimal index when unlabeled.
  std::string label_of(int v) const {
    for (const auto& [name, idx] : labels_) {
      if (idx == v) return name;
    }
    return std::to_string(v);
  }

  Vec3 face_normal(int fi) const {
    const auto& f = faces_.at(std::size_t(fi));
    return (vertex(f[1]) - vertex(f[0])).cross(vertex(f[2]) - vertex(f[0]));
  }

  double face_area(int fi) const { return 0.5 * face_normal(fi).norm(); }

 private:
  void validate() const {
    const int n = num_vertices();
    for (int i = 0; i < n; ++i) {
      if (!is_finite(vertices_[std::size_t(i)])) {
        throw ValidationError("vertex " + std::to_string(i) + " has a non-finite coordinate");
      }
    }
    std::set<std::pair<int, int>> directed;
    std::map<Edge, int> uses;
    for (int fi = 0; fi < num_faces(); ++fi) {
      const auto& f = faces_[std::size_t(fi)];
      for (int k = 0; k < 3; ++k) {
        if (f[k] < 0 || f[k] >= n) {
          throw ValidationError("face " + std::to_string(fi) + " has out-of-range vertex index " +
                                std::to_string(f[k]));
        }
      }
      if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
        throw ValidationError("face " + std::to_string(fi) + " repeats a vertex index");
      }
      for (int k = 0; k < 3; ++k) {
        const int u = f[k], v = f[(k + 1) % 3];
        if (!directed.emplace(u, v).second) {
          throw ValidationError("face " + std::to_string(fi) + " traverses edge (" + std::to_string(u) +
                                "," + std::to_string(v) + ") in the same direction as another face");
        }
        if (++uses[Edge(u, v)] > 2) {
          throw ValidationError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                                ") is shared by more than two faces (face " + std::to_string(fi) + ")");
        }
      }
    }
    for (const auto& [name, idx] : labels_) {
      if (idx < 0 || idx >= n) throw ValidationError("label '" + name + "' refers to a missing vertex");
    }
  }

  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::map<std::string, int> labels_;
};

struct MeshStats {
  int V = 0;
  int E = 0;
  int F = 0;
  int euler_characteristic = 0;
  bool is_closed = false;
  bool is_triangulated_sphere = false;
};

inline MeshStats mesh_stats(const TriMesh& mesh) {
  MeshStats s;
  s.V = mesh.num_vertices();
  s.E = int(mesh.edges().size());
  s.F = mesh.num_faces();
  s.euler_characteristic = s.V - s.E + s.F;
  s.is_closed = mesh.is_closed();
  s.is_triangulated_sphere =
      s.is_closed && s.euler_characteristic == 2 && 3 * s.F == 2 * s.E && mesh.face_components() == 1;
  return s;
}

/// Threshold below which an edge counts as zero length: 1e-12 of the bbox diameter.
inline double zero_length_threshold(std::span<const Vec3> pts) { return 1e-12 * diameter(pts); }

inline EdgeLengthMap edge_lengths(const TriMesh& mesh) {
  EdgeLengthMap out;
  const double tiny = zero_length_threshold(mesh.vertices());
  for (const auto& e : mesh.edges()) {
    const double len = (mesh.vertex(e.a) - mesh.vertex(e.b)).norm();
    if (!(len > tiny)) {
      throw DegenerateError("zero-length edge (" + std::to_string(e.a) + "," + std::to_string(e.b) + ")");
    }
    out[e] = len;
  }
  return out;
}

/// Signed volume of a face set against the origin; no closedness check.
inline double signed_volume_raw(std::span<const Vec3> pts, std::span<const Face> faces) {
  double v = 0;
  for (const auto& f : faces) {
    v += pts[std::size_t(f[0])].dot(pts[std::size_t(f[1])].cross(pts[std::size_t(f[2])]));
  }
  return v / 6.0;
}

inline double signed_volume(const TriMesh& mesh) {
  if (!mesh.is_closed()) throw ValidationError("signed_volume: mesh is not closed");
  return signed_volume_raw(mesh.vertices(), mesh.faces());
}

/// The same surface with every face reversed.
inline TriMesh reversed(const TriMesh& mesh) {
  std::vector<Face> faces = mesh.faces();
  for (auto& f : faces) std::swap(f[1], f[2]);
  return TriMesh(mesh.vertices(), std::move(faces), mesh.labels());
}

/// Outward-oriented triangulated convex hull of points in general position.
/// Brute force over triples; meant for the small seeds used in tests and
/// the catalog (tens of points).
inline TriMesh convex_hull(std::vector<Vec3> pts) {
  const int n = int(pts.size());
  if (n < 4) throw DegenerateError("convex_hull: need at least 4 points");
  const double eps = 1e-10 * std::max(1.0, diameter(pts));
  std::vector<Face> faces;
  std::vector<bool> used(std::size_t(n), false);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      for (int k = j + 1; k < n; ++k) {
        const Vec3 nrm = (pts[std::size_t(j)] - pts[std::size_t(i)]).cross(pts[std::size_t(k)] - pts[std::size_t(i)]);
        if (nrm.norm() < eps) continue;
        int pos = 0, neg = 0;
        for (int m = 0; m < n; ++m) {
          if (m == i || m == j || m == k) continue;
          const double d = nrm.dot(pts[std::size_t(m)] - pts[std::size_t(i)]) / nrm.norm();
          if (d > eps) ++pos;
          else if (d < -eps) ++neg;
          else throw DegenerateError("convex_hull: four coplanar points");
        }
        if (pos && neg) continue;
        faces.push_back(pos ? Face{i, k, j} : Face{i, j, k});
        used[std::size_t(i)] = used[std::size_t(j)] = used[std::size_t(k)] = true;
      }
    }
  }
  if (std::find(used.begin(), used.end(), false) != used.end()) {
    throw DegenerateError("convex_hull: some points are not extreme");
  }
  return TriMesh(std::move(pts), std::move(faces));
}

/// `count` points on the unit sphere (all extreme), seeded.
inline std::vector<Vec3> random_sphere_points(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Vec3> pts;
  while (int(pts.size()) < count) {
    Vec3 p(n(rng), n(rng), n(rng));
    if (p.norm() < 1e-6) continue;
    p.normalize();
    bool close = false;
    for (const auto& q : pts) close = close || (p - q).norm() < 0.2;
    if (!close) pts.push_back(p);
  }
  return pts;
}

}  // namespace flexpoly
