// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "flexpoly/io.hpp"
#include "flexpoly/netexport.hpp"

#include <cstdio>
#include <iostream>

using namespace flexpoly;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: ";
      else detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

int failures = 0;

void report(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << title;
  auto d = o.detail.str();
  while (!d.empty() && d.back() == ' ') d.pop_back();
  if (!d.empty()) std::cout << " -- " << d;
  std::cout << std::endl;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

const std::vector<std::string> kTwins{"bricard1", "bricard2", "twinned_anticupola", "star_dodecahedron"};

std::vector<TriMesh> hulls() {
  std::vector<TriMesh> out;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) out.push_back(convex_hull(random_sphere_points(8 + int(seed % 7), seed)));
  return out;
}

// Default full-range trace of a catalog model, cached across criteria.
const FlexPath& traced(const std::string& name) {
  static std::map<std::string, FlexPath> cache;
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;
  const auto m = catalog(name);
  const auto setup = model_drivers(name, m);
  auto path = trace_full_range(make_problem(m, setup.drivers, setup.pinned), model_mesh(m).vertices(), 100);
  return cache.emplace(name, std::move(path)).first->second;
}

double cube_of_diameter(const TriMesh& m) {
  const double d = diameter(m.vertices());
  return d * d * d;
}

// --- triangle oracle ---------------------------------------------------------

double orient(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) { return (b - a).cross(c - a).dot(d - a); }

// Brute force: clip each edge of one triangle against the other's plane and
// test the crossing point for containment.
bool oracle_hits(const Triangle& a, const Triangle& b) {
  auto edge_hits = [](const Vec3& p, const Vec3& q, const Triangle& t) {
    const double dp = orient(t[0], t[1], t[2], p), dq = orient(t[0], t[1], t[2], q);
    if ((dp > 0) == (dq > 0)) return false;
    const Vec3 x = p + (dp / (dp - dq)) * (q - p);
    const Vec3 n = (t[1] - t[0]).cross(t[2] - t[0]);
    for (int k = 0; k < 3; ++k) {
      if ((t[(k + 1) % 3] - t[k]).cross(x - t[k]).dot(n) < 0) return false;
    }
    return true;
  };
  for (int k = 0; k < 3; ++k) {
    if (edge_hits(a[k], a[(k + 1) % 3], b) || edge_hits(b[k], b[(k + 1) % 3], a)) return true;
  }
  return false;
}

// Distance from the nearest vertex of either triangle to the other's plane:
// pairs closer than this to a touching configuration are ambiguous.
double separation(const Triangle& a, const Triangle& b) {
  double s = std::numeric_limits<double>::infinity();
  const Vec3 na = (a[1] - a[0]).cross(a[2] - a[0]).normalized(), nb = (b[1] - b[0]).cross(b[2] - b[0]).normalized();
  for (int k = 0; k < 3; ++k) {
    s = std::min(s, std::abs((b[k] - a[0]).dot(na)));
    s = std::min(s, std::abs((a[k] - b[0]).dot(nb)));
  }
  return s;
}

}  // namespace

int main() {
  std::cout << std::unitbuf;

  report(1, "Euler and degree-of-freedom counts of closed models", [](Outcome& o) {
    int checked = 0;
    for (const auto& spec : catalog_models()) {
      const auto m = catalog(spec.name);
      const auto& mesh = model_mesh(m);
      if (!mesh.is_closed()) continue;
      const auto s = mesh_stats(mesh);
      ++checked;
      o.require(s.euler_characteristic == 2, spec.name + ": V-E+F=" + std::to_string(s.euler_characteristic));
      o.require(3 * s.F == 2 * s.E, spec.name + ": 3F != 2E");
      o.require(3 * s.V - s.E == 6, spec.name + ": 3V-E=" + std::to_string(3 * s.V - s.E));
    }
    const auto oct = mesh_stats(octahedron());
    o.require(oct.V == 6 && oct.E == 12, "octahedron counts");
    o.detail << checked << " closed models";
  });

  report(2, "Rigidity of convex hulls and one mode after deleting an edge", [](Outcome& o) {
    int deletions = 0;
    for (const auto& h : hulls()) {
      const auto fw = Framework::from_mesh(h);
      const auto r = analyze(fw, 1e-8);
      o.require(r.flex_modes.empty(), "hull with V=" + std::to_string(h.num_vertices()) + " has modes");
      for (const auto& e : fw.bars) {
        const auto cut = analyze(fw.without_bar(e), 1e-8);
        o.require(cut.flex_modes.size() == 1, "edge deletion gave " + std::to_string(cut.flex_modes.size()) + " modes");
        ++deletions;
      }
    }
    o.detail << "20 hulls, " << deletions << " single-edge deletions";
  });

  report(3, "Twins certify finite flexibility with accurate edge lengths", [](Outcome& o) {
    for (const char* name : {"bricard1", "bricard2", "twinned_anticupola"}) {
      const auto t = std::get<Twin>(catalog(name));
      const auto c = finite_flex_certificate(t, 100, 0.05);
      o.require(c.verdict == FlexVerdict::FinitelyFlexible, std::string(name) + ": " + to_string(c.verdict));
      o.require(c.amplitude >= 0.05 * c.equator_diagonal, std::string(name) + ": amplitude too small");
      double err = 0;
      if (c.path) {
        for (const auto& f : c.path->frames) err = std::max(err, f.diag.edge_err);
      }
      o.require(c.path && err < 1e-8, std::string(name) + ": edge error " + sci(err));
      o.detail << name << " amp/diag=" << sci(c.amplitude / c.equator_diagonal) << " err=" << sci(err) << " ";
    }
  });

  report(4, "Equator symmetry persists along every twin path", [](Outcome& o) {
    for (const auto& name : kTwins) {
      double worst = 0;
      for (const auto& f : traced(name).frames) worst = std::max(worst, f.diag.sym_residual);
      o.require(worst < 1e-8, name + ": residual " + sci(worst));
      o.detail << name << "=" << sci(worst) << " ";
    }
  });

  report(5, "Type I twins have zero volume; bellows volume is constant", [](Outcome& o) {
    for (const auto& name : kTwins) {
      const auto t = std::get<Twin>(catalog(name));
      if (t.kind != SymmetryKind::TypeI) continue;
      double worst = 0;
      for (const auto& f : traced(name).frames) worst = std::max(worst, std::abs(f.diag.volume));
      o.require(worst < 1e-10 * cube_of_diameter(t.mesh), name + ": |V| " + sci(worst));
      o.detail << name << " |V|max=" << sci(worst) << " ";
    }
    for (const auto& name : {"bricard1", "bricard2", "twinned_anticupola", "star_dodecahedron", "steffen_template",
                             "foxtrot_template"}) {
      const auto& frames = traced(name).frames;
      double lo = frames.front().diag.volume, hi = lo;
      for (const auto& f : frames) lo = std::min(lo, f.diag.volume), hi = std::max(hi, f.diag.volume);
      const double drift = (hi - lo) / cube_of_diameter(model_mesh(catalog(name)));
      o.require(drift < 1e-8, std::string(name) + ": drift " + sci(drift));
      o.detail << name << " drift=" << sci(drift) << " ";
    }
  });

  report(6, "Flexible twins self-intersect on every frame; convex surfaces are embedded", [](Outcome& o) {
    for (const char* name : {"bricard1", "star_dodecahedron"}) {
      const auto emb = path_embedding(traced(name), model_mesh(catalog(name)));
      int clean = 0;
      for (const auto& r : emb.reports) clean += r.pairs.empty();
      o.require(clean == 0, std::string(name) + ": " + std::to_string(clean) + " frames without crossings");
      o.detail << name << " " << emb.reports.size() - std::size_t(clean) << "/" << emb.reports.size() << " frames crossing ";
    }
    o.require(self_intersections(cube()).is_embedded(), "cube reports crossings");
    for (const auto& h : hulls()) o.require(self_intersections(h).is_embedded(), "a hull reports crossings");
  });

  report(7, "Phantom distances: constant for the Bricard crinkle, pinned for the pentagonal crinkle", [](Outcome& o) {
    auto spread = [](const FlexPath& p, std::size_t k) {
      double lo = p.frames.front().diag.phantom.at(k), hi = lo;
      for (const auto& f : p.frames) lo = std::min(lo, f.diag.phantom.at(k)), hi = std::max(hi, f.diag.phantom.at(k));
      return (hi - lo) / hi;
    };
    const auto& b = traced("bricard_crinkle");
    const double sb = spread(b, 0);
    o.require(sb < 1e-8, "bricard crinkle phantom spread " + sci(sb));
    const auto pent = std::get<Crinkle>(catalog("pentagonal_crinkle"));
    const auto& ph = pent.phantom_pairs;
    const auto lone = make_problem(Model(pent), {DistanceDriver{ph[1].a, ph[1].b}});
    const int rank = jacobian_rank(lone, pent.mesh.vertices());
    o.require(rank == 3 * pent.mesh.num_vertices() - 1, "one driver leaves rank " + std::to_string(rank));
    const auto& p = traced("pentagonal_crinkle");
    const double sp = spread(p, 0);
    const double moved = p.frames.back().t() - p.frames.front().t();
    o.require(sp < 1e-8, "pinned phantom spread " + sci(sp));
    o.require(moved > 0 && p.status == PathStatus::Complete, "second phantom did not move");
    o.detail << "bricard spread=" << sci(sb) << " pentagonal pinned spread=" << sci(sp) << " driver sweep=" << sci(moved);
  });

  report(8, "Triangle intersection agrees with a brute-force oracle on 10^4 pairs", [](Outcome& o) {
    std::mt19937_64 rng(31337);
    std::uniform_real_distribution<double> u(-1, 1);
    int pairs = 0, hits = 0, ambiguous = 0, disagreements = 0;
    while (pairs < 10000) {
      Triangle a, b;
      for (auto& p : a) p = Vec3(u(rng), u(rng), u(rng));
      for (auto& p : b) p = Vec3(u(rng), u(rng), u(rng));
      if ((a[1] - a[0]).cross(a[2] - a[0]).norm() < 1e-3 || (b[1] - b[0]).cross(b[2] - b[0]).norm() < 1e-3) continue;
      ++pairs;
      const bool expect = oracle_hits(a, b);
      const bool got = intersect_triangles(a, b).has_value();
      hits += expect;
      if (expect != got) {
        if (separation(a, b) > 1e-6) ++disagreements;
        else ++ambiguous;
      }
    }
    o.require(disagreements == 0, std::to_string(disagreements) + " disagreements");
    o.detail << pairs << " pairs, " << hits << " intersecting, " << ambiguous << " near-touching mismatches";
  });

  report(9, "Nets are congruent and refold; the new crinkle lies flat", [](Outcome& o) {
    double worst_cong = 0, worst_refold = 0;
    int nets = 0;
    auto check = [&](const TriMesh& mesh, std::span<const Vec3> x) {
      const auto net = unfold(mesh, x);
      worst_cong = std::max(worst_cong, net_congruence_error(net, mesh, x));
      worst_refold = std::max(worst_refold, refold_residual(net, mesh, x));
      ++nets;
    };
    for (const char* name : {"bricard1", "bricard2", "twinned_anticupola", "star_dodecahedron", "bricard_crinkle",
                             "pentagonal_crinkle", "new_crinkle", "steffen_template", "foxtrot_template"}) {
      const auto mesh = model_mesh(catalog(name));
      const auto& frames = traced(name).frames;
      for (std::size_t k = 0; k < frames.size(); k += 9) check(mesh, frames[k].vertices);
    }
    for (const auto& h : hulls()) check(h, h.vertices());
    check(cube(), cube().vertices());
    o.require(worst_cong < 1e-9, "congruence " + sci(worst_cong));
    o.require(worst_refold < 1e-7, "refold " + sci(worst_refold));
    const auto nc = model_mesh(catalog("new_crinkle"));
    const auto flat = unfold(nc);
    o.require(flat.overlaps.empty(), "new crinkle net has " + std::to_string(flat.overlaps.size()) + " overlaps");
    o.detail << nets << " nets, congruence " << sci(worst_cong) << ", refold " << sci(worst_refold)
             << ", new crinkle overlaps " << flat.overlaps.size();
  });

  report(10, "Embedding search is reproducible for a fixed seed", [](Outcome& o) {
    SearchOptions opt;
    opt.budget = 4;
    opt.frames = 20;
    opt.seed = 7;
    const ParamBox box{{"c_x", {-0.9, -0.5}}, {"c_z", {0.1, 0.3}}};
    const auto a = scan_to_json(search_embedding("bricard1", box, opt)).dump();
    const auto b = scan_to_json(search_embedding("bricard1", box, opt)).dump();
    o.require(a == b, "bricard1 scans differ");
    // the foxtrot template is exercised for determinism only; its success is not judged
    opt.budget = 2;
    const ParamBox fox{{"h1", {0.4, 0.8}}, {"tip_height", {0.4, 0.8}}};
    const auto c = search_embedding("foxtrot_template", fox, opt);
    const auto d = search_embedding("foxtrot_template", fox, opt);
    o.require(scan_to_json(c).dump() == scan_to_json(d).dump(), "foxtrot scans differ");
    double best = 0;
    for (const auto& s : c.samples) best = std::max(best, s.embedded_range);
    o.detail << "identical scan tables; foxtrot best embedded range " << sci(best) << " (not judged)";
  });

  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
