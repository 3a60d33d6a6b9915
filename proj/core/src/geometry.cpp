#include "catre/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace catre {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDegenerateInput: return "degenerate-input";
    case ErrorKind::kInvalidSize: return "invalid-size";
    case ErrorKind::kDegenerateConfig: return "degenerate-config";
    case ErrorKind::kDegenerateExtent: return "degenerate-extent";
    case ErrorKind::kInsufficientPoints: return "insufficient-points";
    case ErrorKind::kUnknownCategory: return "unknown-category";
    case ErrorKind::kEmptyVisibility: return "empty-visibility";
    case ErrorKind::kEmptyBall: return "empty-ball";
    case ErrorKind::kIo: return "io-error";
    case ErrorKind::kFormat: return "format-error";
    case ErrorKind::kVersionMismatch: return "version-mismatch";
    case ErrorKind::kShapeMismatch: return "shape-mismatch";
    case ErrorKind::kBackwardOnNonScalar: return "backward-on-non-scalar";
    case ErrorKind::kNanLoss: return "nan-loss";
    case ErrorKind::kInvalidConfig: return "invalid-config";
    case ErrorKind::kIdMismatch: return "id-mismatch";
  }
  return "unknown";
}

namespace {

constexpr double kSixDEps = 1e-8;

Mat3 skew(const Vec3& v) {
  Mat3 k;
  // clang-format off
  k <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return k;
}

}  // namespace

Rotation Rotation::from_matrix(const Mat3& m, double tol) {
  const double ortho_err = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (!(ortho_err <= tol) || !(std::abs(det - 1.0) <= tol)) {
    throw Error(ErrorKind::kDegenerateInput, "matrix is not a proper rotation");
  }
  return Rotation(m);
}

Rotation Rotation::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (n <= 0.0) {
    if (angle_rad == 0.0) return Rotation();
    throw Error(ErrorKind::kDegenerateInput, "zero rotation axis");
  }
  return Rotation(Eigen::AngleAxisd(angle_rad, axis / n).toRotationMatrix());
}

SymmetrySpec SymmetrySpec::continuous(const Vec3& axis) {
  const double n = axis.norm();
  if (n <= 0.0) throw Error(ErrorKind::kDegenerateInput, "zero symmetry axis");
  return {Kind::kContinuousAxis, axis / n};
}

Rotation rotation_from_6d(const Vec3& rx, const Vec3& ry) {
  const double nx = rx.norm();
  if (nx <= kSixDEps) throw Error(ErrorKind::kDegenerateInput, "first 6D column is ~zero");
  const Vec3 c1 = rx / nx;
  const Vec3 u = ry - ry.dot(c1) * c1;
  const double nu = u.norm();
  if (nu <= kSixDEps) throw Error(ErrorKind::kDegenerateInput, "6D columns are parallel");
  const Vec3 c2 = u / nu;
  Mat3 m;
  m.col(0) = c1;
  m.col(1) = c2;
  m.col(2) = c1.cross(c2);
  return Rotation::from_matrix_unchecked(m);
}

Pose9D compose_pose(const Pose9D& init, const PoseDelta& delta) {
  Pose9D out{delta.r_delta * init.r, init.t + delta.t_delta, init.s + delta.s_delta};
  if (!(out.s.array() > 0.0).all()) {
    throw Error(ErrorKind::kInvalidSize, "composed size has a non-positive component");
  }
  return out;
}

PoseDelta relative_delta(const Pose9D& from, const Pose9D& to) {
  return {to.r * from.r.inverse(), to.t - from.t, to.s - from.s};
}

FocalizedClouds focalize(const PointCloud& observed, const PointCloud& prior_points,
                         const Pose9D& init) {
  FocalizedClouds out;
  out.observed = observed.rowwise() - init.t.transpose();
  out.prior = (prior_points * init.r.matrix().transpose()).array().rowwise() *
              init.s.transpose().array();
  return out;
}

PointCloud transform_points(const Pose9D& pose, const PointCloud& pts) {
  PointCloud out = (pts * pose.r.matrix().transpose()).array().rowwise() * pose.s.transpose().array();
  out.rowwise() += pose.t.transpose();
  return out;
}

PointCloud inverse_transform_points(const Pose9D& pose, const PointCloud& pts) {
  PointCloud local = (pts.rowwise() - pose.t.transpose()).array().rowwise() /
                     pose.s.transpose().array();
  return local * pose.r.matrix();
}

PointCloud rigid_transform(const Rotation& r, const Vec3& t, const PointCloud& pts) {
  PointCloud out = pts * r.matrix().transpose();
  out.rowwise() += t.transpose();
  return out;
}

double rotation_geodesic_deg(const Rotation& a, const Rotation& b) {
  // atan2 keeps full precision near 0 and 180 degrees, where acos does not.
  const Mat3 m = a.matrix() * b.matrix().transpose();
  const double sin_th = 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)).norm();
  const double cos_th = 0.5 * (m.trace() - 1.0);
  return std::atan2(sin_th, cos_th) * 180.0 / std::numbers::pi;
}

Rotation sym_align_rotation(const Rotation& r_gt, const Rotation& r_est, const SymmetrySpec& sym) {
  if (!sym.symmetric()) return r_gt;
  // Tr(M R_axis(th)) = C + A cos(th) + B sin(th) with Rodrigues' expansion of R_axis.
  const Mat3 k = skew(sym.axis);
  const Mat3 k2 = k * k;
  const Mat3 m = r_est.matrix().transpose() * r_gt.matrix();
  const double a = -(m * k2).trace();
  const double b = (m * k).trace();
  const double theta = std::atan2(b, a);
  return r_gt * Rotation::from_axis_angle(sym.axis, theta);
}

Vec3 centroid(const PointCloud& pts) { return pts.colwise().mean().transpose(); }

Similarity umeyama(const PointCloud& src, const PointCloud& dst, bool with_scale) {
  const Eigen::Index n = src.rows();
  if (n < 3 || dst.rows() != n) {
    throw Error(ErrorKind::kDegenerateConfig, "umeyama needs two equal-size sets of >= 3 points");
  }
  const Vec3 mu_src = centroid(src);
  const Vec3 mu_dst = centroid(dst);
  const PointCloud src_c = src.rowwise() - mu_src.transpose();
  const PointCloud dst_c = dst.rowwise() - mu_dst.transpose();

  const Mat3 src_cov = src_c.transpose() * src_c / static_cast<double>(n);
  Eigen::JacobiSVD<Mat3> src_svd(src_cov);
  const auto& sv = src_svd.singularValues();
  if (sv(0) <= 0.0 || sv(1) <= 1e-12 * sv(0)) {
    throw Error(ErrorKind::kDegenerateConfig, "source points have rank < 2");
  }

  const Mat3 sigma = dst_c.transpose() * src_c / static_cast<double>(n);
  Eigen::JacobiSVD<Mat3> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 d = Vec3::Ones();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) d(2) = -1.0;
  const Mat3 r = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();

  double c = 1.0;
  if (with_scale) {
    const double src_var = src_c.squaredNorm() / static_cast<double>(n);
    c = svd.singularValues().dot(d) / src_var;
  }
  Similarity out;
  out.r = Rotation::from_matrix_unchecked(r);
  out.scale = c;
  out.t = mu_dst - c * r * mu_src;
  return out;
}

}  // namespace catre
