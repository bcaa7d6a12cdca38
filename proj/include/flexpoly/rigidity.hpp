#pragma once

// Bar-joint rigidity: degree-of-freedom count, rigidity matrix, numerical
// rank and the nontrivial infinitesimal flexes.

#include "flexpoly/mesh.hpp"

namespace flexpoly {

struct Framework {
  std::vector<Vec3> joints;
  std::vector<Edge> bars;

  Framework() = default;
  Framework(std::vector<Vec3> j, std::vector<Edge> b) : joints(std::move(j)), bars(std::move(b)) {
    std::set<Edge> seen;
    for (const auto& e : bars) {
      if (e.a == e.b) throw ValidationError("bar endpoints must be distinct");
      if (e.a < 0 || e.b >= int(joints.size())) throw ValidationError("bar refers to a missing joint");
      if (!seen.insert(e).second) {
        throw ValidationError("duplicate bar (" + std::to_string(e.a) + "," + std::to_string(e.b) + ")");
      }
    }
    for (const auto& p : joints) {
      if (!is_finite(p)) throw ValidationError("joint coordinate is not finite");
    }
  }

  static Framework from_mesh(const TriMesh& m) { return Framework(m.vertices(), m.edges()); }

  int num_joints() const { return int(joints.size()); }
  int num_bars() const { return int(bars.size()); }

  Framework without_bar(Edge e) const {
    std::vector<Edge> b;
    for (const auto& x : bars) {
      if (x != e) b.push_back(x);
    }
    if (b.size() == bars.size()) throw ValidationError("without_bar: no such bar");
    return Framework(joints, std::move(b));
  }
};

inline int dof_count(const Framework& fw) { return 3 * fw.num_joints() - fw.num_bars(); }

/// E x 3V; row for bar (i,j) carries p_i - p_j in block i and p_j - p_i in block j.
inline Eigen::MatrixXd rigidity_matrix(const Framework& fw) {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(fw.num_bars(), 3 * fw.num_joints());
  for (int row = 0; row < fw.num_bars(); ++row) {
    const auto& e = fw.bars[std::size_t(row)];
    const Vec3 d = fw.joints[std::size_t(e.a)] - fw.joints[std::size_t(e.b)];
    r.block<1, 3>(row, 3 * e.a) = d.transpose();
    r.block<1, 3>(row, 3 * e.b) = -d.transpose();
  }
  return r;
}

/// Columns span the rigid-body velocity fields (3 translations, 3 rotations
/// about the centroid), reduced to an orthonormal basis of their span.
inline Eigen::MatrixXd trivial_motion_basis(std::span<const Vec3> joints) {
  const int n = int(joints.size());
  Vec3 c = Vec3::Zero();
  for (const auto& p : joints) c += p;
  c /= double(n);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(3 * n, 6);
  for (int i = 0; i < n; ++i) {
    const Vec3 r = joints[std::size_t(i)] - c;
    for (int k = 0; k < 3; ++k) {
      t(3 * i + k, k) = 1.0;
      const Vec3 w = Vec3::Unit(k).cross(r);
      t.block<3, 1>(3 * i, 3 + k) = w;
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(t, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  int keep = 0;
  for (int k = 0; k < s.size(); ++k) {
    if (s[k] > 1e-9 * s[0]) ++keep;
  }
  return svd.matrixU().leftCols(keep);
}

struct RigidityReport {
  int dof_count = 0;
  int matrix_rank = 0;
  int trivial_motions = 0;
  std::vector<Eigen::VectorXd> flex_modes;
  std::vector<double> singular_values;
  bool is_isostatic = false;
};

inline constexpr double kDefaultRankTolerance = 1e-8;

inline RigidityReport analyze(const Framework& fw, double tol = kDefaultRankTolerance) {
  if (!(tol > 0 && tol < 1e-3)) throw ValidationError("analyze: tolerance must lie in (0, 1e-3)");
  const int n = fw.num_joints();
  if (n == 0) throw DegenerateError("analyze: framework has no joints");
  if (diameter(fw.joints) == 0.0) throw DegenerateError("analyze: all joints coincide");

  RigidityReport rep;
  rep.dof_count = dof_count(fw);
  const Eigen::MatrixXd r = rigidity_matrix(fw);
  const Eigen::MatrixXd trivial = trivial_motion_basis(fw.joints);
  rep.trivial_motions = int(trivial.cols());

  Eigen::MatrixXd null_basis;
  if (fw.num_bars() == 0) {
    null_basis = Eigen::MatrixXd::Identity(3 * n, 3 * n);
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    for (int k = 0; k < s.size(); ++k) rep.singular_values.push_back(s[k]);
    for (int k = 0; k < s.size(); ++k) {
      if (s[k] > tol * s[0]) ++rep.matrix_rank;
    }
    null_basis = svd.matrixV().rightCols(3 * n - rep.matrix_rank);
  }

  // project the null space off the trivial motions and keep what survives
  Eigen::MatrixXd projected = null_basis - trivial * (trivial.transpose() * null_basis);
  const int expected = 3 * n - rep.matrix_rank - rep.trivial_motions;
  if (expected > 0 && projected.cols() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> psvd(projected, Eigen::ComputeThinU);
    for (int k = 0; k < expected && k < psvd.singularValues().size(); ++k) {
      rep.flex_modes.emplace_back(psvd.matrixU().col(k));
    }
  }
  rep.is_isostatic = rep.matrix_rank == fw.num_bars() && rep.flex_modes.empty();
  return rep;
}

/// Largest |R m| row entry relative to |R| |m|: first-order length change of a mode.
inline double mode_residual(const Framework& fw, const Eigen::VectorXd& mode) {
  const Eigen::MatrixXd r = rigidity_matrix(fw);
  if (r.rows() == 0) return 0.0;
  const double scale = r.rowwise().norm().maxCoeff() * mode.norm();
  return scale > 0 ? (r * mode).cwiseAbs().maxCoeff() / scale : 0.0;
}

}  // namespace flexpoly
