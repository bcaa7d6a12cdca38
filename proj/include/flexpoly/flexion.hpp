#pragma once

// Finite flex tracing. Edge-length constraints (squared, so the system stays
// polynomial), a six-equation gauge and one equation per driver are solved
// by damped Gauss-Newton; natural-parameter continuation with adaptive steps
// walks a schedule of driver values and records per-frame diagnostics.

#include "flexpoly/rigidity.hpp"
#include "flexpoly/twinning.hpp"

#include <numbers>
#include <optional>
#include <sstream>

namespace flexpoly {

struct DistanceDriver {
  int i = 0;
  int j = 0;
};

/// Torsion angle of the chain a-b-c-d about the axis b-c, in radians.
struct DihedralDriver {
  int a = 0, b = 0, c = 0, d = 0;
};

using DriverSpec = std::variant<DistanceDriver, DihedralDriver>;

inline double torsion_angle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 f = a - b, g = b - c, h = d - c;
  const Vec3 na = f.cross(g), nb = h.cross(g);
  return std::atan2(nb.cross(na).dot(g) / g.norm(), na.dot(nb));
}

/// Gradient of torsion_angle with respect to a, b, c, d.
inline std::array<Vec3, 4> torsion_gradient(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const Vec3 f = a - b, g = b - c, h = d - c;
  const Vec3 na = f.cross(g), nb = h.cross(g);
  const double gl = g.norm(), a2 = na.squaredNorm(), b2 = nb.squaredNorm();
  if (a2 == 0.0 || b2 == 0.0 || gl == 0.0) throw DegenerateError("torsion angle undefined for collinear points");
  const Vec3 da = -gl / a2 * na;
  const Vec3 dd = gl / b2 * nb;
  const Vec3 db = gl / a2 * na + f.dot(g) / (a2 * gl) * na - h.dot(g) / (b2 * gl) * nb;
  const Vec3 dc = h.dot(g) / (b2 * gl) * nb - f.dot(g) / (a2 * gl) * na - gl / b2 * nb;
  return {da, db, dc, dd};
}

inline double driver_value(const DriverSpec& d, std::span<const Vec3> x) {
  if (const auto* dist = std::get_if<DistanceDriver>(&d)) {
    return (x[std::size_t(dist->i)] - x[std::size_t(dist->j)]).norm();
  }
  const auto& t = std::get<DihedralDriver>(d);
  return torsion_angle(x[std::size_t(t.a)], x[std::size_t(t.b)], x[std::size_t(t.c)], x[std::size_t(t.d)]);
}

inline std::vector<int> driver_vertices(const DriverSpec& d) {
  if (const auto* dist = std::get_if<DistanceDriver>(&d)) return {dist->i, dist->j};
  const auto& t = std::get<DihedralDriver>(d);
  return {t.a, t.b, t.c, t.d};
}

/// One vertex pinned, one confined to a ray from it, one to a plane.
struct Gauge {
  int fixed = 0;
  int ray = 1;
  int plane = 2;
  Vec3 origin = Vec3::Zero();
  Vec3 ray_u = Vec3::UnitY();  // the two directions orthogonal to the ray
  Vec3 ray_w = Vec3::UnitZ();
  Vec3 plane_normal = Vec3::UnitZ();

  static Gauge from(std::span<const Vec3> x, int fixed, int ray, int plane) {
    const Vec3 r = x[std::size_t(ray)] - x[std::size_t(fixed)];
    const Vec3 n = r.cross(x[std::size_t(plane)] - x[std::size_t(fixed)]);
    if (r.norm() == 0.0 || n.norm() <= 1e-12 * r.squaredNorm()) {
      throw DegenerateError("gauge vertices are coincident or collinear");
    }
    Gauge g;
    g.fixed = fixed;
    g.ray = ray;
    g.plane = plane;
    g.origin = x[std::size_t(fixed)];
    g.plane_normal = n.normalized();
    g.ray_u = g.plane_normal;
    g.ray_w = r.normalized().cross(g.plane_normal);
    return g;
  }
};

struct PinnedDistance {
  Edge pair;
  double length = 0;
};

/// Per-frame symmetry bookkeeping for twins.
struct SymmetryMonitor {
  std::vector<int> equator;
  std::vector<int> partner;
  SymmetryKind kind = SymmetryKind::TypeI;
};

struct FlexProblem {
  int num_vertices = 0;
  std::vector<Edge> bars;
  std::vector<double> lengths;
  std::vector<PinnedDistance> pinned;
  std::vector<DriverSpec> drivers;
  Gauge gauge;
  // diagnostics only
  std::vector<Face> faces;
  bool closed = false;
  std::optional<SymmetryMonitor> symmetry;
  std::vector<Edge> monitored_pairs;

  int num_equations() const { return int(bars.size() + pinned.size() + drivers.size()) + 6; }
  double mean_squared_length() const {
    double s = 0;
    for (double l : lengths) s += l * l;
    return lengths.empty() ? 1.0 : s / double(lengths.size());
  }
};

/// Picks a gauge triangle: the first face avoiding driver vertices if
/// possible, otherwise the first face.
inline Gauge default_gauge(const TriMesh& mesh, std::span<const Vec3> x, const std::vector<DriverSpec>& drivers) {
  std::set<int> busy;
  for (const auto& d : drivers) {
    for (int v : driver_vertices(d)) busy.insert(v);
  }
  std::optional<Face> pick;
  for (const auto& f : mesh.faces()) {
    if (!busy.count(f[0]) && !busy.count(f[1]) && !busy.count(f[2])) {
      pick = f;
      break;
    }
  }
  if (!pick) pick = mesh.faces().front();
  return Gauge::from(x, (*pick)[0], (*pick)[1], (*pick)[2]);
}

/// Problem over the mesh's own edges at its current lengths.
inline FlexProblem make_problem(const TriMesh& mesh, std::vector<DriverSpec> drivers,
                                std::vector<Edge> pinned_pairs = {}) {
  if (mesh.faces().empty()) throw ValidationError("make_problem: mesh has no faces");
  FlexProblem p;
  p.num_vertices = mesh.num_vertices();
  const auto lengths = edge_lengths(mesh);
  for (const auto& [e, l] : lengths) {
    p.bars.push_back(e);
    p.lengths.push_back(l);
  }
  for (const auto& e : pinned_pairs) {
    if (mesh.has_edge(e.a, e.b)) throw ValidationError("pinned pair is already an edge");
    p.pinned.push_back({e, (mesh.vertex(e.a) - mesh.vertex(e.b)).norm()});
    p.monitored_pairs.push_back(e);
  }
  for (const auto& d : drivers) {
    for (int v : driver_vertices(d)) {
      if (v < 0 || v >= mesh.num_vertices()) throw ValidationError("driver refers to a missing vertex");
    }
  }
  p.drivers = std::move(drivers);
  p.gauge = default_gauge(mesh, mesh.vertices(), p.drivers);
  p.faces = mesh.faces();
  p.closed = mesh.is_closed();
  return p;
}

inline FlexProblem make_problem(const Model& model, std::vector<DriverSpec> drivers,
                                std::vector<Edge> pinned_pairs = {}) {
  FlexProblem p = make_problem(model_mesh(model), std::move(drivers), std::move(pinned_pairs));
  if (const auto* t = std::get_if<Twin>(&model)) {
    p.symmetry = SymmetryMonitor{t->equator, t->partner, t->kind};
  }
  if (const auto* c = std::get_if<Crinkle>(&model)) {
    for (const auto& e : c->phantom_pairs) {
      if (std::find(p.monitored_pairs.begin(), p.monitored_pairs.end(), e) == p.monitored_pairs.end()) {
        p.monitored_pairs.push_back(e);
      }
    }
  }
  return p;
}

using Coords = std::vector<Vec3>;

inline Eigen::VectorXd flatten(std::span<const Vec3> x) {
  Eigen::VectorXd v(3 * Eigen::Index(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v.segment<3>(3 * Eigen::Index(i)) = x[i];
  return v;
}

inline Coords unflatten(const Eigen::VectorXd& v) {
  Coords x(std::size_t(v.size() / 3));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = v.segment<3>(3 * Eigen::Index(i));
  return x;
}

/// Unscaled residuals in row order: bars (|d|^2 - L^2), pinned pairs,
/// drivers (squared distance or angle difference), gauge (linear).
inline Eigen::VectorXd constraint_residuals(const FlexProblem& p, std::span<const Vec3> x,
                                            std::span<const double> targets) {
  Eigen::VectorXd r(p.num_equations());
  int row = 0;
  for (std::size_t k = 0; k < p.bars.size(); ++k) {
    const auto& e = p.bars[k];
    r[row++] = (x[std::size_t(e.a)] - x[std::size_t(e.b)]).squaredNorm() - p.lengths[k] * p.lengths[k];
  }
  for (const auto& pin : p.pinned) {
    r[row++] = (x[std::size_t(pin.pair.a)] - x[std::size_t(pin.pair.b)]).squaredNorm() - pin.length * pin.length;
  }
  for (std::size_t k = 0; k < p.drivers.size(); ++k) {
    if (const auto* d = std::get_if<DistanceDriver>(&p.drivers[k])) {
      r[row++] = (x[std::size_t(d->i)] - x[std::size_t(d->j)]).squaredNorm() - targets[k] * targets[k];
    } else {
      double diff = driver_value(p.drivers[k], x) - targets[k];
      diff = std::remainder(diff, 2 * std::numbers::pi);
      r[row++] = diff;
    }
  }
  const auto& g = p.gauge;
  const Vec3 f = x[std::size_t(g.fixed)] - g.origin;
  r[row++] = f.x();
  r[row++] = f.y();
  r[row++] = f.z();
  const Vec3 ry = x[std::size_t(g.ray)] - g.origin;
  r[row++] = ry.dot(g.ray_u);
  r[row++] = ry.dot(g.ray_w);
  r[row++] = (x[std::size_t(g.plane)] - g.origin).dot(g.plane_normal);
  return r;
}

inline Eigen::MatrixXd constraint_jacobian(const FlexProblem& p, std::span<const Vec3> x) {
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(p.num_equations(), 3 * p.num_vertices);
  int row = 0;
  auto distance_row = [&](int a, int b) {
    const Vec3 d = 2.0 * (x[std::size_t(a)] - x[std::size_t(b)]);
    j.block<1, 3>(row, 3 * a) = d.transpose();
    j.block<1, 3>(row, 3 * b) = -d.transpose();
    ++row;
  };
  for (const auto& e : p.bars) distance_row(e.a, e.b);
  for (const auto& pin : p.pinned) distance_row(pin.pair.a, pin.pair.b);
  for (const auto& drv : p.drivers) {
    if (const auto* d = std::get_if<DistanceDriver>(&drv)) {
      distance_row(d->i, d->j);
    } else {
      const auto& t = std::get<DihedralDriver>(drv);
      const auto grad = torsion_gradient(x[std::size_t(t.a)], x[std::size_t(t.b)], x[std::size_t(t.c)],
                                         x[std::size_t(t.d)]);
      const std::array<int, 4> ids{t.a, t.b, t.c, t.d};
      for (std::size_t k = 0; k < 4; ++k) j.block<1, 3>(row, 3 * ids[k]) += grad[k].transpose();
      ++row;
    }
  }
  const auto& g = p.gauge;
  for (int k = 0; k < 3; ++k) j(row++, 3 * g.fixed + k) = 1.0;
  j.block<1, 3>(row++, 3 * g.ray) = g.ray_u.transpose();
  j.block<1, 3>(row++, 3 * g.ray) = g.ray_w.transpose();
  j.block<1, 3>(row++, 3 * g.plane) = g.plane_normal.transpose();
  return j;
}

/// Row weights making the system dimensionless: squared-length rows by the
/// mean squared edge length, gauge rows by its square root.
inline Eigen::VectorXd row_scales(const FlexProblem& p) {
  const double s = p.mean_squared_length();
  Eigen::VectorXd w(p.num_equations());
  int row = 0;
  for (std::size_t k = 0; k < p.bars.size() + p.pinned.size(); ++k) w[row++] = 1.0 / s;
  for (const auto& d : p.drivers) w[row++] = std::holds_alternative<DistanceDriver>(d) ? 1.0 / s : 1.0;
  for (int k = 0; k < 6; ++k) w[row++] = 1.0 / std::sqrt(s);
  return w;
}

struct SolverOptions {
  int max_iterations = 50;
  double tolerance = 1e-12;  // max scaled residual
  double singular_threshold = 1e-8;
};

struct SolveResult {
  Coords coords;
  int iterations = 0;
  double residual = 0;
  double min_singular_value = 0;
  bool bifurcation_warning = false;
};

inline double min_singular_value(const FlexProblem& p, std::span<const Vec3> x) {
  const Eigen::MatrixXd j = row_scales(p).asDiagonal() * constraint_jacobian(p, x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  const auto& s = svd.singularValues();
  return s.size() ? s[s.size() - 1] : 0.0;
}

/// Gauss-Newton with halving line search. Returns nullopt on non-convergence.
inline std::optional<SolveResult> try_solve_frame(const FlexProblem& p, std::span<const double> targets,
                                                  std::span<const Vec3> guess, const SolverOptions& opt = {}) {
  if (int(targets.size()) != int(p.drivers.size())) throw ValidationError("solve_frame: wrong number of driver values");
  if (int(guess.size()) != p.num_vertices) throw ValidationError("solve_frame: wrong number of coordinates");
  const Eigen::VectorXd w = row_scales(p);
  Eigen::VectorXd x = flatten(guess);
  Coords cur(guess.begin(), guess.end());
  Eigen::VectorXd r = w.cwiseProduct(constraint_residuals(p, cur, targets));
  double norm = r.norm();
  for (int it = 0; it <= opt.max_iterations; ++it) {
    if (r.cwiseAbs().maxCoeff() < opt.tolerance) {
      SolveResult res;
      res.coords = std::move(cur);
      res.iterations = it;
      res.residual = r.cwiseAbs().maxCoeff();
      res.min_singular_value = min_singular_value(p, res.coords);
      res.bifurcation_warning = res.min_singular_value < opt.singular_threshold;
      return res;
    }
    if (it == opt.max_iterations) break;
    const Eigen::MatrixXd j = w.asDiagonal() * constraint_jacobian(p, cur);
    const Eigen::VectorXd step = j.completeOrthogonalDecomposition().solve(-r);
    if (!step.allFinite()) return std::nullopt;
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 12; ++ls, alpha *= 0.5) {
      const Eigen::VectorXd xn = x + alpha * step;
      const Coords trial = unflatten(xn);
      const Eigen::VectorXd rn = w.cwiseProduct(constraint_residuals(p, trial, targets));
      if (rn.norm() < (1.0 - 1e-4 * alpha) * norm || rn.cwiseAbs().maxCoeff() < opt.tolerance) {
        x = xn;
        cur = trial;
        r = rn;
        norm = rn.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted) return std::nullopt;
  }
  return std::nullopt;
}

inline SolveResult solve_frame(const FlexProblem& p, std::span<const double> targets, std::span<const Vec3> guess,
                               const SolverOptions& opt = {}) {
  auto res = try_solve_frame(p, targets, guess, opt);
  if (!res) throw SolverError("solve_frame: Newton did not converge");
  return *res;
}

inline std::vector<double> current_driver_values(const FlexProblem& p, std::span<const Vec3> x) {
  std::vector<double> v;
  for (const auto& d : p.drivers) v.push_back(driver_value(d, x));
  return v;
}

/// Rank of the constraint Jacobian; below 3V the trace is underdetermined.
inline int jacobian_rank(const FlexProblem& p, std::span<const Vec3> x, double tol = 1e-10) {
  const Eigen::MatrixXd j = row_scales(p).asDiagonal() * constraint_jacobian(p, x);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
  const auto& s = svd.singularValues();
  int r = 0;
  for (int k = 0; k < s.size(); ++k) {
    if (s[k] > tol * s[0]) ++r;
  }
  return r;
}

inline void require_determined(const FlexProblem& p, std::span<const Vec3> x) {
  const int rank = jacobian_rank(p, x);
  if (rank < 3 * p.num_vertices) {
    throw ValidationError("flex problem is underdetermined: constraint rank " + std::to_string(rank) + " < " +
                          std::to_string(3 * p.num_vertices) + " (add drivers or pinned distances)");
  }
}

// ---------------------------------------------------------------------------
// Symmetry residual

/// Max distance between each vertex's image under the equator isometry
/// (re-derived from the current equator coordinates) and its partner.
inline double equator_residual(std::span<const Vec3> x, const SymmetryMonitor& s) {
  if (s.equator.size() != 4) throw ValidationError("equator_residual: equator must be a quadrilateral");
  const std::array<int, 4> loop{s.equator[0], s.equator[1], s.equator[2], s.equator[3]};
  const auto q = quad_points(x, loop);
  std::function<Vec3(const Vec3&)> iso;
  if (s.kind == SymmetryKind::TypeI) {
    const auto l = line_through_midpoints(q);
    iso = [l](const Vec3& p) { return l.apply(p); };
  } else {
    const auto pl = plane_through_bisector(q);
    iso = [pl](const Vec3& p) { return pl.apply(p); };
  }
  double worst = 0;
  for (std::size_t v = 0; v < s.partner.size() && v < x.size(); ++v) {
    if (s.partner[v] < 0) continue;
    worst = std::max(worst, (iso(x[v]) - x[std::size_t(s.partner[v])]).norm());
  }
  return worst;
}

inline double equator_residual(std::span<const Vec3> x, const Twin& t) {
  return equator_residual(x, SymmetryMonitor{t.equator, t.partner, t.kind});
}

// ---------------------------------------------------------------------------
// Paths

struct FrameDiagnostics {
  double edge_err = 0;  // max relative edge-length error
  double volume = std::numeric_limits<double>::quiet_NaN();
  double sym_residual = std::numeric_limits<double>::quiet_NaN();
  double min_sv = 0;
  std::vector<double> phantom;  // distances of monitored pairs
  bool bifurcation = false;
};

struct Frame {
  std::vector<double> driver;
  Coords vertices;
  FrameDiagnostics diag;

  double t() const { return driver.empty() ? 0.0 : driver.front(); }
};

enum class PathStatus { Complete, Locked };

struct FlexPath {
  std::vector<DriverSpec> drivers;
  std::vector<Edge> monitored_pairs;
  std::vector<Frame> frames;
  PathStatus status = PathStatus::Complete;
  std::string reason;
};

inline FrameDiagnostics diagnose(const FlexProblem& p, std::span<const Vec3> x, double min_sv,
                                 double singular_threshold = 1e-8) {
  FrameDiagnostics d;
  for (std::size_t k = 0; k < p.bars.size(); ++k) {
    const auto& e = p.bars[k];
    const double len = (x[std::size_t(e.a)] - x[std::size_t(e.b)]).norm();
    d.edge_err = std::max(d.edge_err, std::abs(len - p.lengths[k]) / p.lengths[k]);
  }
  if (p.closed) d.volume = signed_volume_raw(x, p.faces);
  if (p.symmetry) d.sym_residual = equator_residual(x, *p.symmetry);
  for (const auto& e : p.monitored_pairs) d.phantom.push_back((x[std::size_t(e.a)] - x[std::size_t(e.b)]).norm());
  d.min_sv = min_sv;
  d.bifurcation = min_sv < singular_threshold;
  return d;
}

struct ContinuationOptions {
  SolverOptions solver;
  int max_halvings = 10;       // abort after this many halvings of the initial step
  double initial_fraction = 1.0 / 64;
  double max_fraction = 1.0 / 16;
  int grow_after = 4;          // consecutive successes before doubling
};

namespace detail {

/// Walks driver values from `from` to `to` starting at coordinates `x`.
/// Returns the reached fraction in [0,1] and leaves `x` at the last solved point.
struct Walk {
  double reached = 0;
  bool complete = false;
};

inline Walk continue_between(const FlexProblem& p, Coords& x, const std::vector<double>& from,
                             const std::vector<double>& to, double range, double& step,
                             const ContinuationOptions& opt, const double diam) {
  double span = 0;
  for (std::size_t k = 0; k < from.size(); ++k) span = std::max(span, std::abs(to[k] - from[k]));
  Walk w;
  if (span == 0) {
    const auto res = try_solve_frame(p, to, x, opt.solver);
    if (!res) return w;
    x = res->coords;
    w.reached = 1;
    w.complete = true;
    return w;
  }
  const double min_step = range * opt.initial_fraction / std::ldexp(1.0, opt.max_halvings);
  const double max_step = range * opt.max_fraction;
  double s = 0;
  int successes = 0;
  std::optional<Coords> prev;
  double prev_ds = 0;
  std::vector<double> target(from.size());
  while (s < 1.0) {
    const double ds = std::min(step / span, 1.0 - s);
    for (std::size_t k = 0; k < from.size(); ++k) target[k] = from[k] + (s + ds) * (to[k] - from[k]);
    Coords guess = x;
    if (prev && prev_ds > 0) {
      const double ratio = ds / prev_ds;
      for (std::size_t i = 0; i < x.size(); ++i) guess[i] = x[i] + ratio * (x[i] - (*prev)[i]);
    }
    auto res = try_solve_frame(p, target, guess, opt.solver);
    if (res) {
      // reject jumps far from the prediction (a different branch)
      double jump = 0, move = 0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        jump = std::max(jump, (res->coords[i] - guess[i]).norm());
        move = std::max(move, (guess[i] - x[i]).norm());
      }
      if (jump > std::max(0.05 * diam, 0.5 * move) && jump > 1e-9 * diam) res.reset();
    }
    if (!res) {
      step *= 0.5;
      successes = 0;
      if (step < min_step) return w;
      continue;
    }
    prev = x;
    prev_ds = ds;
    x = std::move(res->coords);
    s += ds;
    w.reached = s;
    if (++successes >= opt.grow_after) {
      step = std::min(step * 2, max_step);
      successes = 0;
    }
  }
  w.reached = 1;
  w.complete = true;
  return w;
}

}  // namespace detail

/// Traces the schedule (one vector of driver values per frame) starting from
/// `start`. The first frame is reached from `start` by unrecorded continuation.
inline FlexPath trace(const FlexProblem& p, std::span<const Vec3> start, const std::vector<std::vector<double>>& schedule,
                      const ContinuationOptions& opt = {}) {
  if (schedule.empty()) throw ValidationError("trace: empty schedule");
  for (const auto& s : schedule) {
    if (s.size() != p.drivers.size()) throw ValidationError("trace: schedule entry has the wrong number of driver values");
  }
  require_determined(p, start);
  const double diam = diameter(start);
  double range = 0;
  const auto v0 = current_driver_values(p, start);
  for (std::size_t k = 0; k < p.drivers.size(); ++k) {
    double lo = v0[k], hi = v0[k];
    for (const auto& s : schedule) {
      lo = std::min(lo, s[k]);
      hi = std::max(hi, s[k]);
    }
    range = std::max(range, hi - lo);
  }
  if (range == 0) range = 1.0;
  double step = range * opt.initial_fraction;

  FlexPath path;
  path.drivers = p.drivers;
  path.monitored_pairs = p.monitored_pairs;
  Coords x(start.begin(), start.end());
  auto first = detail::continue_between(p, x, v0, schedule.front(), range, step, opt, diam);
  if (!first.complete) throw SolverError("trace: could not reach the first frame of the schedule");
  auto record = [&](const std::vector<double>& vals) {
    const double sv = min_singular_value(p, x);
    path.frames.push_back({vals, x, diagnose(p, x, sv, opt.solver.singular_threshold)});
  };
  record(schedule.front());
  for (std::size_t k = 1; k < schedule.size(); ++k) {
    const auto walk = detail::continue_between(p, x, schedule[k - 1], schedule[k], range, step, opt, diam);
    if (!walk.complete) {
      path.status = PathStatus::Locked;
      std::ostringstream msg;
      msg << "mechanism locked between frames " << k - 1 << " and " << k << " (Newton failed at minimal step)";
      path.reason = msg.str();
      break;
    }
    record(schedule[k]);
  }
  return path;
}

/// Evenly spaced schedule sweeping the first driver from a to b while the
/// others stay at `held`.
inline std::vector<std::vector<double>> linear_schedule(double a, double b, int frames,
                                                        const std::vector<double>& held = {}) {
  if (frames < 1) throw ValidationError("schedule needs at least one frame");
  std::vector<std::vector<double>> s;
  for (int k = 0; k < frames; ++k) {
    const double t = frames == 1 ? 0.0 : double(k) / double(frames - 1);
    std::vector<double> row{a + t * (b - a)};
    row.insert(row.end(), held.begin(), held.end());
    s.push_back(std::move(row));
  }
  return s;
}

struct MotionLimit {
  double value = 0;      // last value of the first driver reached
  Coords coords;         // configuration there
  bool reached_target = false;
};

/// Pushes the first driver from its current value towards `target`, other
/// drivers held, until the target or a lock (Newton failure at minimal step).
inline MotionLimit explore_limit(const FlexProblem& p, std::span<const Vec3> start, double target,
                                 const ContinuationOptions& opt = {}) {
  if (p.drivers.empty()) throw ValidationError("explore_limit: no driver");
  const auto v0 = current_driver_values(p, start);
  auto to = v0;
  to[0] = target;
  Coords x(start.begin(), start.end());
  const double span = std::abs(target - v0[0]);
  double step = span * opt.initial_fraction;
  const auto walk = detail::continue_between(p, x, v0, to, span, step, opt, diameter(start));
  return {v0[0] + walk.reached * (target - v0[0]), x, walk.complete};
}

struct MotionRange {
  double lo = 0, hi = 0;
  Coords at_lo, at_hi;
  bool lo_locked = false, hi_locked = false;
};

/// Empirical motion range of the first driver around the start configuration.
/// Distance drivers are searched in (0, v0 + 2 diam], angles in (v0 - pi, v0 + pi).
inline MotionRange motion_range(const FlexProblem& p, std::span<const Vec3> start, const ContinuationOptions& opt = {}) {
  require_determined(p, start);
  const double v0 = driver_value(p.drivers.front(), start);
  const bool angle = std::holds_alternative<DihedralDriver>(p.drivers.front());
  const double diam = diameter(start);
  const double up = angle ? v0 + 0.999 * std::numbers::pi : v0 + 2 * diam;
  const double down = angle ? v0 - 0.999 * std::numbers::pi : 1e-6 * v0;
  auto hi = explore_limit(p, start, up, opt);
  auto lo = explore_limit(p, start, down, opt);
  return {lo.value, hi.value, std::move(lo.coords), std::move(hi.coords), !lo.reached_target, !hi.reached_target};
}

/// Traces `frames` evenly spaced values across the empirical motion range of
/// the first driver (others held at their start values), pulled in from each
/// locked end by `margin` of the range.
inline FlexPath trace_full_range(const FlexProblem& p, std::span<const Vec3> start, int frames,
                                 double margin = 1e-3, const ContinuationOptions& opt = {}) {
  const auto r = motion_range(p, start, opt);
  const double width = r.hi - r.lo;
  if (!(width > 0)) throw SolverError("trace: the driver cannot move from its start value (rigid or locked)");
  const double a = r.lo + (r.lo_locked ? margin * width : 0.0);
  const double b = r.hi - (r.hi_locked ? margin * width : 0.0);
  auto held = current_driver_values(p, start);
  held.erase(held.begin());
  return trace(p, r.at_lo, linear_schedule(a, b, frames, held), opt);
}

// ---------------------------------------------------------------------------
// Certificate

enum class FlexVerdict { Rigid, InfinitesimalOnly, FinitelyFlexible };

inline std::string to_string(FlexVerdict v) {
  switch (v) {
    case FlexVerdict::Rigid: return "rigid";
    case FlexVerdict::InfinitesimalOnly: return "infinitesimally flexible only";
    default: return "finitely flexible";
  }
}

struct FlexCertificate {
  FlexVerdict verdict = FlexVerdict::Rigid;
  int modes_at_construction = 0;
  int modes_at_generic_frame = -1;
  double equator_diagonal = 0;
  double range_lo = 0, range_hi = 0;
  double amplitude = 0;
  std::optional<FlexPath> path;
};

/// Infinitesimal mode count plus a finite trace of the equator diagonal AA'.
/// Finite flexibility needs an achieved amplitude of at least
/// `min_amplitude` times |AA'|.
inline FlexCertificate finite_flex_certificate(const Twin& t, int frames = 100, double min_amplitude = 0.05,
                                               const ContinuationOptions& opt = {}) {
  FlexCertificate c;
  const auto rep = analyze(Framework::from_mesh(t.mesh));
  c.modes_at_construction = int(rep.flex_modes.size());
  const auto& x = t.mesh.vertices();
  c.equator_diagonal = (x[std::size_t(t.equator[0])] - x[std::size_t(t.equator[2])]).norm();
  if (rep.flex_modes.empty()) return c;
  const auto p = make_problem(Model(t), {DistanceDriver{t.equator[0], t.equator[2]}});
  MotionRange r;
  try {
    r = motion_range(p, x, opt);
  } catch (const ValidationError&) {
    c.verdict = FlexVerdict::InfinitesimalOnly;
    return c;
  }
  c.range_lo = r.lo;
  c.range_hi = r.hi;
  c.amplitude = r.hi - r.lo;
  if (c.amplitude < min_amplitude * c.equator_diagonal) {
    c.verdict = FlexVerdict::InfinitesimalOnly;
    return c;
  }
  c.path = trace_full_range(p, x, frames, 1e-3, opt);
  const auto& mid = c.path->frames[c.path->frames.size() / 2].vertices;
  c.modes_at_generic_frame = int(analyze(Framework(mid, t.mesh.edges())).flex_modes.size());
  c.verdict = FlexVerdict::FinitelyFlexible;
  return c;
}

// ---------------------------------------------------------------------------
// Default drivers

struct DriverSetup {
  std::vector<DriverSpec> drivers;
  std::vector<Edge> pinned;
};

/// Non-edge vertex pair whose distance changes fastest along the single
/// infinitesimal flex of the mesh.
inline DistanceDriver auto_driver(const TriMesh& mesh) {
  const auto rep = analyze(Framework::from_mesh(mesh));
  if (rep.flex_modes.size() != 1) {
    throw ValidationError("cannot pick a driver automatically: the mesh has " + std::to_string(rep.flex_modes.size()) +
                          " flex modes (specify drivers explicitly)");
  }
  const auto& m = rep.flex_modes.front();
  const auto& x = mesh.vertices();
  double best = -1;
  DistanceDriver pick;
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    for (int j = i + 1; j < mesh.num_vertices(); ++j) {
      if (mesh.has_edge(i, j)) continue;
      const Vec3 d = x[std::size_t(i)] - x[std::size_t(j)];
      const double rate = std::abs(d.dot(m.segment<3>(3 * i) - m.segment<3>(3 * j))) / d.norm();
      if (rate > best + 1e-12) {
        best = rate;
        pick = {i, j};
      }
    }
  }
  if (best < 0) throw ValidationError("cannot pick a driver automatically: every vertex pair is an edge");
  return pick;
}

/// Twins drive the removed diagonal AA'. A crinkle with one phantom pair
/// drives the other diagonal of its quadrilateral boundary; with k > 1 pairs
/// the first k - 1 are pinned and the last is driven. Anything else drives
/// the pair picked by auto_driver.
inline DriverSetup default_driver(const Model& model) {
  if (const auto* t = std::get_if<Twin>(&model)) return {{DistanceDriver{t->equator[0], t->equator[2]}}, {}};
  if (const auto* c = std::get_if<Crinkle>(&model)) {
    const auto& ph = c->phantom_pairs;
    if (ph.size() == 1 && c->boundary.size() == 4) {
      const auto& b = c->boundary;
      const Edge d1(b[0], b[2]), d2(b[1], b[3]);
      return {{DistanceDriver{(ph[0] == d1 ? d2 : d1).a, (ph[0] == d1 ? d2 : d1).b}}, {}};
    }
    if (ph.size() > 1) {
      return {{DistanceDriver{ph.back().a, ph.back().b}}, std::vector<Edge>(ph.begin(), ph.end() - 1)};
    }
  }
  return {{auto_driver(model_mesh(model))}, {}};
}

}  // namespace flexpoly
