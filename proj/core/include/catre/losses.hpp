#pragma once

#include "catre/autonet/model.hpp"
#include "catre/geometry.hpp"
#include "catre/priors.hpp"

namespace catre {

struct LossBreakdown {
  double l_pm = 0.0;
  double l_rot = 0.0;
  double l_t = 0.0;
  double l_s = 0.0;
  double total = 0.0;
};

/// Mean over prior points of the L1 distance between gt- and est-placed
/// points. With `with_size` false the size product is skipped (metric priors).
double loss_pm(const Pose9D& gt, const Pose9D& est, const ShapePrior& prior,
               bool with_size = true);
/// (3 - Tr(r_gt r_est^T)) / 4, in [0, 1].
double loss_rot(const Rotation& r_gt, const Rotation& r_est);
double loss_t(const Vec3& t_gt, const Vec3& t_est);
double loss_s(const Vec3& s_gt, const Vec3& s_est);

/// gt rotation is first aligned to est about the symmetry axis. Instance
/// mode (`with_size` false) drops L_s and the size product in L_pm.
LossBreakdown total_loss(const Pose9D& gt, const Pose9D& est, const ShapePrior& prior,
                         const SymmetrySpec& sym, bool with_size = true);

template <typename T>
struct LossGraph {
  autonet::Tensor<T> l_pm, l_rot, l_t, l_s;  // l_s undefined without size
  autonet::Tensor<T> total;

  LossBreakdown values() const;
};

/// Differentiable form on a refinement graph. The symmetry-aligned gt
/// rotation enters as a constant.
template <typename T>
LossGraph<T> total_loss_graph(const Pose9D& gt, const autonet::RefineGraph<T>& est,
                              const ShapePrior& prior, const SymmetrySpec& sym,
                              bool with_size = true);

}  // namespace catre
