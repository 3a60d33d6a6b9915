#include "catre/losses.hpp"

namespace catre {

using autonet::Matrix;
using autonet::Tensor;

double loss_pm(const Pose9D& gt, const Pose9D& est, const ShapePrior& prior, bool with_size) {
  if (prior.n_points() == 0) throw Error(ErrorKind::kDegenerateInput, "empty prior");
  Pose9D a = gt;
  Pose9D b = est;
  if (!with_size) a.s = b.s = Vec3::Ones();
  const PointCloud d = transform_points(a, prior.points) - transform_points(b, prior.points);
  return d.cwiseAbs().sum() / static_cast<double>(prior.n_points());
}

double loss_rot(const Rotation& r_gt, const Rotation& r_est) {
  return (3.0 - (r_gt.matrix() * r_est.matrix().transpose()).trace()) / 4.0;
}

double loss_t(const Vec3& t_gt, const Vec3& t_est) { return (t_gt - t_est).lpNorm<1>(); }
double loss_s(const Vec3& s_gt, const Vec3& s_est) { return (s_gt - s_est).lpNorm<1>(); }

LossBreakdown total_loss(const Pose9D& gt, const Pose9D& est, const ShapePrior& prior,
                         const SymmetrySpec& sym, bool with_size) {
  Pose9D aligned = gt;
  aligned.r = sym_align_rotation(gt.r, est.r, sym);
  LossBreakdown b;
  b.l_pm = loss_pm(aligned, est, prior, with_size);
  b.l_rot = loss_rot(aligned.r, est.r);
  b.l_t = loss_t(gt.t, est.t);
  b.l_s = with_size ? loss_s(gt.s, est.s) : 0.0;
  b.total = b.l_pm + b.l_rot + b.l_t + b.l_s;
  return b;
}

template <typename T>
LossBreakdown LossGraph<T>::values() const {
  LossBreakdown b;
  b.l_pm = static_cast<double>(l_pm.item());
  b.l_rot = static_cast<double>(l_rot.item());
  b.l_t = static_cast<double>(l_t.item());
  b.l_s = l_s.defined() ? static_cast<double>(l_s.item()) : 0.0;
  b.total = static_cast<double>(total.item());
  return b;
}

namespace {

template <typename T>
Tensor<T> row_const(const Vec3& v) {
  Matrix<T> m(1, 3);
  m << static_cast<T>(v(0)), static_cast<T>(v(1)), static_cast<T>(v(2));
  return Tensor<T>::constant(std::move(m));
}

}  // namespace

template <typename T>
LossGraph<T> total_loss_graph(const Pose9D& gt, const autonet::RefineGraph<T>& est,
                              const ShapePrior& prior, const SymmetrySpec& sym, bool with_size) {
  if (prior.n_points() == 0) throw Error(ErrorKind::kDegenerateInput, "empty prior");
  const Eigen::MatrixXd r_val = est.r_est.value().template cast<double>();
  const Rotation r_est_now = rotation_from_6d(r_val.col(0), r_val.col(1));
  Pose9D aligned = gt;
  aligned.r = sym_align_rotation(gt.r, r_est_now, sym);
  if (!with_size) aligned.s = Vec3::Ones();

  const auto p = Tensor<T>::constant(prior.points.cast<T>());
  Tensor<T> placed = matmul(p, transpose(est.r_est));
  if (with_size) placed = mul(placed, est.s_est);
  placed = add(placed, est.t_est);
  const auto target = Tensor<T>::constant(transform_points(aligned, prior.points).cast<T>());

  LossGraph<T> g;
  g.l_pm = scale(sum(abs(sub(placed, target))), T(1) / static_cast<T>(prior.n_points()));
  const auto r_gt = Tensor<T>::constant(aligned.r.matrix().cast<T>());
  // Tr(A B^T) is the elementwise inner product of A and B.
  g.l_rot = add_scalar(scale(sum(mul(r_gt, est.r_est)), T(-0.25)), T(0.75));
  g.l_t = sum(abs(sub(est.t_est, row_const<T>(gt.t))));
  g.total = add(add(g.l_pm, g.l_rot), g.l_t);
  if (with_size) {
    g.l_s = sum(abs(sub(est.s_est, row_const<T>(gt.s))));
    g.total = add(g.total, g.l_s);
  }
  return g;
}

template struct LossGraph<float>;
template struct LossGraph<double>;
template LossGraph<float> total_loss_graph(const Pose9D&, const autonet::RefineGraph<float>&,
                                           const ShapePrior&, const SymmetrySpec&, bool);
template LossGraph<double> total_loss_graph(const Pose9D&, const autonet::RefineGraph<double>&,
                                            const ShapePrior&, const SymmetrySpec&, bool);

}  // namespace catre
