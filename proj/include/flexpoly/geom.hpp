#pragma once

// Basic geometric vocabulary shared by every module: points, error types,
// bounding boxes, rigid alignment.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexpoly {

using Vec3 = Eigen::Vector3d;
using Point3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Input violates a structural or parameter contract (CLI exit code 2).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Geometry is too degenerate for the requested operation.
class DegenerateError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A numerical solve failed to converge (CLI exit code 3).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool is_finite(const Vec3& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

struct BoundingBox {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool empty() const { return lo.x() > hi.x(); }
  double diameter() const { return empty() ? 0.0 : (hi - lo).norm(); }
  bool overlaps(const BoundingBox& o, double pad = 0.0) const {
    for (int k = 0; k < 3; ++k) {
      if (lo[k] > o.hi[k] + pad || o.lo[k] > hi[k] + pad) return false;
    }
    return true;
  }
};

inline BoundingBox bounding_box(std::span<const Vec3> pts) {
  BoundingBox b;
  for (const auto& p : pts) b.extend(p);
  return b;
}

inline double diameter(std::span<const Vec3> pts) { return bounding_box(pts).diameter(); }

/// Rotation + translation taking one point set onto another.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 operator()(const Vec3& p) const { return rotation * p + translation; }
};

inline std::vector<Vec3> transformed(const RigidTransform& t, std::span<const Vec3> pts) {
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(t(p));
  return out;
}

/// Least-squares proper rigid motion mapping `from` onto `to` (Kabsch).
inline RigidTransform kabsch(std::span<const Vec3> from, std::span<const Vec3> to) {
  if (from.size() != to.size() || from.empty()) {
    throw ValidationError("kabsch: point sets must be non-empty and equally sized");
  }
  Vec3 cf = Vec3::Zero(), ct = Vec3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    cf += from[i];
    ct += to[i];
  }
  cf /= double(from.size());
  ct /= double(to.size());
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) h += (from[i] - cf) * (to[i] - ct).transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0) d(2, 2) = -1;
  RigidTransform t;
  t.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  t.translation = ct - t.rotation * cf;
  return t;
}

/// Max point distance after optimal rigid alignment of `a` onto `b`.
inline double procrustes_residual(std::span<const Vec3> a, std::span<const Vec3> b) {
  const auto t = kabsch(a, b);
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, (t(a[i]) - b[i]).norm());
  return worst;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

/// Unit vector with lexicographically positive leading nonzero component.
inline Vec3 canonical_direction(Vec3 d, double eps = 1e-12) {
  d.normalize();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) > eps) {
      if (d[k] < 0) d = -d;
      break;
    }
  }
  return d;
}

/// Any unit vector orthogonal to `d`.
inline Vec3 any_perpendicular(const Vec3& d) {
  const Vec3 axis = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return d.cross(axis).normalized();
}

}  // namespace flexpoly
