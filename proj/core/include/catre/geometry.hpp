#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>

#include "catre/error.hpp"

namespace catre {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
/// N x 3 point set, one point per row.
using PointCloud = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Proper rotation matrix. Construction through the checked factory enforces
/// orthonormality and det = +1.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }
  /// Throws kDegenerateInput if `m` is not in SO(3) within `tol`.
  static Rotation from_matrix(const Mat3& m, double tol = 1e-9);
  /// No validation; for matrices that are rotations by construction.
  static Rotation from_matrix_unchecked(const Mat3& m) { return Rotation(m); }
  static Rotation from_axis_angle(const Vec3& axis, double angle_rad);

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& other) const { return Rotation(m_ * other.m_); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

struct Pose9D {
  Rotation r;
  Vec3 t = Vec3::Zero();
  Vec3 s = Vec3::Ones();
};

struct PoseDelta {
  Rotation r_delta;
  Vec3 t_delta = Vec3::Zero();
  Vec3 s_delta = Vec3::Zero();
};

struct SymmetrySpec {
  enum class Kind { kNone, kContinuousAxis };
  Kind kind = Kind::kNone;
  Vec3 axis = Vec3::UnitY();

  static SymmetrySpec none() { return {}; }
  /// Normalizes `axis`.
  static SymmetrySpec continuous(const Vec3& axis);
  bool symmetric() const { return kind == Kind::kContinuousAxis; }
};

/// Gram-Schmidt recovery of a rotation from its first two (unnormalized) columns.
Rotation rotation_from_6d(const Vec3& rx, const Vec3& ry);

/// (R_d R_init, t_init + t_d, s_init + s_d); throws kInvalidSize if a size
/// component ends up non-positive.
Pose9D compose_pose(const Pose9D& init, const PoseDelta& delta);

/// Delta that maps `from` onto `to` under compose_pose.
PoseDelta relative_delta(const Pose9D& from, const Pose9D& to);

struct FocalizedClouds {
  PointCloud observed;  // o - t_init
  PointCloud prior;     // s_init (.) (R_init p)
};

/// Re-expresses the observed cloud and the normalized prior points relative to
/// the initial estimate. The element-wise size product is applied after the
/// rotation.
FocalizedClouds focalize(const PointCloud& observed, const PointCloud& prior_points,
                         const Pose9D& init);

/// x -> s (.) (R x) + t
PointCloud transform_points(const Pose9D& pose, const PointCloud& pts);
/// Inverse of transform_points.
PointCloud inverse_transform_points(const Pose9D& pose, const PointCloud& pts);
/// x -> R x + t
PointCloud rigid_transform(const Rotation& r, const Vec3& t, const PointCloud& pts);

double rotation_geodesic_deg(const Rotation& a, const Rotation& b);

/// Returns r_gt rotated about the symmetry axis (object frame) so that it
/// best matches r_est in the trace sense. Identity for kNone.
Rotation sym_align_rotation(const Rotation& r_gt, const Rotation& r_est, const SymmetrySpec& sym);

struct Similarity {
  Rotation r;
  Vec3 t = Vec3::Zero();
  double scale = 1.0;
};

/// Least-squares similarity (or rigid when !with_scale) transform taking
/// `src` onto `dst`. Throws kDegenerateConfig when src has rank < 2.
Similarity umeyama(const PointCloud& src, const PointCloud& dst, bool with_scale);

Vec3 centroid(const PointCloud& pts);

}  // namespace catre
