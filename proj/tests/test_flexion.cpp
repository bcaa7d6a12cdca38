#include "flexpoly/catalog.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace flexpoly;

namespace {

double max_relative_spread(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return (*hi - *lo) / std::max(std::abs(*hi), std::abs(*lo));
}

FlexProblem bricard_problem(const Twin& t) {
  return make_problem(Model(t), {DistanceDriver{t.equator[0], t.equator[2]}});
}

}  // namespace

TEST(Torsion, KnownAngles) {
  const Vec3 b(0, 0, 0), c(1, 0, 0);
  EXPECT_NEAR(torsion_angle({0, 1, 0}, b, c, {1, 1, 0}), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(torsion_angle({0, 1, 0}, b, c, {1, -1, 0})), std::numbers::pi, 1e-15);
  const double q = torsion_angle({0, 1, 0}, b, c, {1, 0, 1});
  EXPECT_NEAR(std::abs(q), std::numbers::pi / 2, 1e-15);
  // mirror image flips the sign
  EXPECT_NEAR(torsion_angle({0, 1, 0}, b, c, {1, 0, -1}), -q, 1e-15);
}

TEST(Torsion, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::array<Vec3, 4> p;
    for (auto& x : p) x = Vec3(u(rng), u(rng), u(rng));
    const double angle = torsion_angle(p[0], p[1], p[2], p[3]);
    if (std::abs(std::abs(angle) - std::numbers::pi) < 1e-3) continue;  // branch cut
    const auto g = torsion_gradient(p[0], p[1], p[2], p[3]);
    const double h = 1e-6;
    for (std::size_t k = 0; k < 4; ++k) {
      for (int c = 0; c < 3; ++c) {
        auto plus = p, minus = p;
        plus[k][c] += h;
        minus[k][c] -= h;
        const double fd = (torsion_angle(plus[0], plus[1], plus[2], plus[3]) -
                           torsion_angle(minus[0], minus[1], minus[2], minus[3])) / (2 * h);
        EXPECT_NEAR(g[k][c], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "trial " << trial;
      }
    }
  }
}

TEST(Torsion, GradientRejectsCollinearChain) {
  EXPECT_THROW(torsion_gradient({0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 1, 0}), DegenerateError);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  const auto t = std::get<Twin>(catalog("bricard1"));
  const auto& m = t.mesh;
  const int a = *m.find_label("A"), b = *m.find_label("B"), c = *m.find_label("C"), ap = *m.find_label("A'");
  auto p = make_problem(Model(t), {DistanceDriver{a, ap}, DihedralDriver{b, a, c, ap}}, {});
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  Coords x = m.vertices();
  for (auto& v : x) v += Vec3(u(rng), u(rng), u(rng));
  const std::vector<double> targets{1.0, 0.3};
  const Eigen::MatrixXd j = constraint_jacobian(p, x);
  const double h = 1e-6;
  for (int i = 0; i < m.num_vertices(); ++i) {
    for (int k = 0; k < 3; ++k) {
      Coords plus = x, minus = x;
      plus[std::size_t(i)][k] += h;
      minus[std::size_t(i)][k] -= h;
      const Eigen::VectorXd fd = (constraint_residuals(p, plus, targets) - constraint_residuals(p, minus, targets)) / (2 * h);
      EXPECT_LT((j.col(3 * i + k) - fd).cwiseAbs().maxCoeff(), 1e-7) << "vertex " << i << " axis " << k;
    }
  }
}

TEST(Solver, ReachesANewDriverValue) {
  const auto t = std::get<Twin>(catalog("bricard1"));
  const auto p = bricard_problem(t);
  const double v0 = driver_value(p.drivers[0], t.mesh.vertices());
  const std::vector<double> target{v0 * 1.02};
  const auto r = solve_frame(p, target, t.mesh.vertices());
  EXPECT_LT(diagnose(p, r.coords, 1).edge_err, 1e-10);
  EXPECT_NEAR(driver_value(p.drivers[0], r.coords), target[0], 1e-10);
  // gauge vertex stays put
  EXPECT_LT((r.coords[std::size_t(p.gauge.fixed)] - t.mesh.vertex(p.gauge.fixed)).norm(), 1e-12);
}

TEST(Solver, WrongTargetCountRejected) {
  const auto t = std::get<Twin>(catalog("bricard1"));
  const auto p = bricard_problem(t);
  EXPECT_THROW(solve_frame(p, std::vector<double>{1.0, 2.0}, t.mesh.vertices()), ValidationError);
}

TEST(Solver, UnreachableTargetThrows) {
  const auto t = std::get<Twin>(catalog("bricard1"));
  const auto p = bricard_problem(t);
  // far outside the motion range in one Newton solve
  EXPECT_THROW(solve_frame(p, std::vector<double>{50.0}, t.mesh.vertices()), SolverError);
}

TEST(Solver, UnderdeterminedProblemRejected) {
  const auto m = std::get<TriMesh>(catalog("foxtrot_template"));
  const auto p = make_problem(m, {DistanceDriver{*m.find_label("A1"), *m.find_label("A3")}});
  EXPECT_THROW(require_determined(p, m.vertices()), ValidationError);
}

TEST(Trace, GaugeChoiceDoesNotChangeTheShape) {
  const auto t = std::get<Twin>(catalog("bricard1"));
  auto p1 = bricard_problem(t);
  auto p2 = p1;
  const auto& f = t.mesh.faces().back();
  p2.gauge = Gauge::from(t.mesh.vertices(), f[0], f[1], f[2]);
  const double v0 = driver_value(p1.drivers[0], t.mesh.vertices());
  const auto sched = linear_schedule(v0, v0 * 1.2, 20);
  const auto a = trace(p1, t.mesh.vertices(), sched);
  const auto b = trace(p2, t.mesh.vertices(), sched);
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    EXPECT_LT(procrustes_residual(a.frames[k].vertices, b.frames[k].vertices), 1e-8) << "frame " << k;
  }
}

TEST(Trace, ReversingTheScheduleReturnsToTheStart) {
  const auto t = std::get<Twin>(catalog("twinned_anticupola"));
  const auto p = bricard_problem(t);
  const double v0 = driver_value(p.drivers[0], t.mesh.vertices());
  const auto fwd = trace(p, t.mesh.vertices(), linear_schedule(v0, v0 * 1.3, 30));
  ASSERT_EQ(fwd.status, PathStatus::Complete);
  const auto back = trace(p, fwd.frames.back().vertices, linear_schedule(v0 * 1.3, v0, 30));
  ASSERT_EQ(back.status, PathStatus::Complete);
  EXPECT_LT(procrustes_residual(back.frames.back().vertices, t.mesh.vertices()), 1e-8);
}

TEST(Trace, RigidFrameworkCannotMove) {
  const auto o = octahedron();
  const auto p = make_problem(o, {DistanceDriver{0, 1}});
  const double v0 = driver_value(p.drivers[0], o.vertices());
  const auto path = trace(p, o.vertices(), linear_schedule(v0, v0 * 1.2, 5));
  EXPECT_EQ(path.status, PathStatus::Locked);
  EXPECT_EQ(path.frames.size(), 1u);
  EXPECT_THROW(trace_full_range(p, o.vertices(), 5), SolverError);
}

TEST(Trace, PastTheEndOfTheRangeLocks) {
  const auto t = std::get<Twin>(catalog("bricard1"));
  const auto p = bricard_problem(t);
  const auto r = motion_range(p, t.mesh.vertices());
  ASSERT_TRUE(r.hi_locked);
  const auto path = trace(p, t.mesh.vertices(), linear_schedule(r.lo + 0.1 * (r.hi - r.lo), r.hi + 0.5 * (r.hi - r.lo), 40));
  EXPECT_EQ(path.status, PathStatus::Locked);
  EXPECT_FALSE(path.reason.empty());
  EXPECT_LT(path.frames.size(), 40u);
  for (const auto& f : path.frames) EXPECT_LT(f.diag.edge_err, 1e-8);
}

TEST(Trace, ScheduleValidation) {
  EXPECT_THROW(linear_schedule(0, 1, 0), ValidationError);
  const auto t = std::get<Twin>(catalog("bricard1"));
  EXPECT_THROW(trace(bricard_problem(t), t.mesh.vertices(), {}), ValidationError);
  EXPECT_THROW(trace(bricard_problem(t), t.mesh.vertices(), {{1.0, 2.0}}), ValidationError);
}

TEST(Certificate, TwinsAreFinitelyFlexible) {
  for (const char* name : {"bricard1", "bricard2", "twinned_anticupola", "star_dodecahedron"}) {
    const auto t = std::get<Twin>(catalog(name));
    const auto c = finite_flex_certificate(t, 100);
    EXPECT_EQ(c.verdict, FlexVerdict::FinitelyFlexible) << name;
    EXPECT_EQ(c.modes_at_construction, 1) << name;
    EXPECT_EQ(c.modes_at_generic_frame, 1) << name;
    EXPECT_GE(c.amplitude, 0.05 * c.equator_diagonal) << name;
    ASSERT_TRUE(c.path) << name;
    EXPECT_EQ(c.path->frames.size(), 100u) << name;
    for (const auto& f : c.path->frames) {
      EXPECT_LT(f.diag.edge_err, 1e-8) << name;
      EXPECT_LT(f.diag.sym_residual, 1e-8) << name;
    }
  }
}

TEST(Crinkle, BricardCrinkleKeepsItsPhantomDistance) {
  const auto c = std::get<Crinkle>(catalog("bricard_crinkle"));
  const auto setup = default_driver(Model(c));
  const auto p = make_problem(Model(c), setup.drivers, setup.pinned);
  const auto path = trace_full_range(p, c.mesh.vertices(), 60);
  ASSERT_EQ(path.status, PathStatus::Complete);
  std::vector<double> d;
  for (const auto& f : path.frames) {
    ASSERT_EQ(f.diag.phantom.size(), 1u);
    d.push_back(f.diag.phantom[0]);
  }
  EXPECT_LT(max_relative_spread(d), 1e-8);
}

TEST(Crinkle, PentagonalCrinkleHasTwoDegreesOfFreedom) {
  const auto c = std::get<Crinkle>(catalog("pentagonal_crinkle"));
  const auto& ph = c.phantom_pairs;
  const auto one = make_problem(Model(c), {DistanceDriver{ph[1].a, ph[1].b}});
  EXPECT_THROW(require_determined(one, c.mesh.vertices()), ValidationError);
  const auto setup = default_driver(Model(c));
  ASSERT_EQ(setup.pinned.size(), 1u);
  const auto two = make_problem(Model(c), setup.drivers, setup.pinned);
  EXPECT_NO_THROW(require_determined(two, c.mesh.vertices()));
  const auto path = trace_full_range(two, c.mesh.vertices(), 40);
  std::vector<double> pinned;
  for (const auto& f : path.frames) pinned.push_back(f.diag.phantom[0]);
  EXPECT_LT(max_relative_spread(pinned), 1e-8);
  EXPECT_GT(path.frames.back().t() - path.frames.front().t(), 0.05);
}

TEST(Bellows, SteffenTemplateKeepsItsVolume) {
  const auto m = catalog("steffen_template");
  const auto setup = default_driver(m);
  const auto p = make_problem(m, setup.drivers, setup.pinned);
  const auto path = trace_full_range(p, model_mesh(m).vertices(), 40);
  std::vector<double> v;
  for (const auto& f : path.frames) v.push_back(f.diag.volume);
  EXPECT_GT(std::abs(v.front()), 1e-3);
  EXPECT_LT(max_relative_spread(v), 1e-8);
  EXPECT_GT(path.frames.back().t() - path.frames.front().t(), 0.05);
}

TEST(Bellows, FoxtrotTemplateKeepsItsVolume) {
  const auto m = catalog("foxtrot_template");
  const auto setup = model_drivers("foxtrot_template", m);
  const auto p = make_problem(m, setup.drivers, setup.pinned);
  EXPECT_NO_THROW(require_determined(p, model_mesh(m).vertices()));
  const auto path = trace_full_range(p, model_mesh(m).vertices(), 30);
  std::vector<double> v;
  for (const auto& f : path.frames) {
    v.push_back(f.diag.volume);
    EXPECT_LT(f.diag.edge_err, 1e-8);
  }
  EXPECT_LT(max_relative_spread(v), 1e-8);
}

TEST(Drivers, DefaultsPerModelKind) {
  const auto t = std::get<Twin>(catalog("bricard1"));
  const auto s = default_driver(Model(t));
  ASSERT_EQ(s.drivers.size(), 1u);
  const auto& d = std::get<DistanceDriver>(s.drivers[0]);
  EXPECT_EQ(Edge(d.i, d.j), Edge(t.equator[0], t.equator[2]));
  // rigid meshes have no mode to follow
  EXPECT_THROW(auto_driver(cube()), ValidationError);
  EXPECT_THROW(auto_driver(convex_hull(random_sphere_points(9, 3))), ValidationError);
}
