#include "catre/priors.hpp"

#include <limits>
#include <string>

namespace catre {

std::string_view to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::kMeanShape: return "mean-shape";
    case PriorKind::kBBoxCorners: return "bbox-corners";
    case PriorKind::kAxes: return "axes";
    case PriorKind::kFpsModel: return "fps-model";
  }
  return "unknown";
}

PriorKind prior_kind_from_string(std::string_view name) {
  for (PriorKind k : {PriorKind::kMeanShape, PriorKind::kBBoxCorners, PriorKind::kAxes,
                      PriorKind::kFpsModel}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorKind::kInvalidConfig, "unknown prior kind '" + std::string(name) + "'");
}

ShapePrior normalize_prior(const PointCloud& points, PriorKind kind) {
  if (points.rows() == 0) throw Error(ErrorKind::kDegenerateExtent, "empty point set");
  const Vec3 lo = points.colwise().minCoeff().transpose();
  const Vec3 hi = points.colwise().maxCoeff().transpose();
  const Vec3 extent = hi - lo;
  if (!(extent.array() > 0.0).all()) {
    throw Error(ErrorKind::kDegenerateExtent, "prior has zero extent along an axis");
  }
  const Vec3 center = 0.5 * (lo + hi);
  ShapePrior out;
  out.kind = kind;
  out.points = (points.rowwise() - center.transpose()).array().rowwise() /
               extent.transpose().array();
  return out;
}

ShapePrior bbox_corners_prior() {
  ShapePrior out;
  out.kind = PriorKind::kBBoxCorners;
  out.points.resize(8, 3);
  for (int i = 0; i < 8; ++i) {
    out.points.row(i) << ((i & 1) ? 0.5 : -0.5), ((i & 2) ? 0.5 : -0.5), ((i & 4) ? 0.5 : -0.5);
  }
  return out;
}

ShapePrior axes_prior() {
  ShapePrior out;
  out.kind = PriorKind::kAxes;
  out.points.resize(4, 3);
  // clang-format off
  out.points << 0.0, 0.0, 0.0,
                0.5, 0.0, 0.0,
                0.0, 0.5, 0.0,
                0.0, 0.0, 0.5;
  // clang-format on
  return out;
}

std::vector<Eigen::Index> fps_indices(const PointCloud& points, int k) {
  const Eigen::Index n = points.rows();
  if (k < 1 || n < k) {
    throw Error(ErrorKind::kInsufficientPoints,
                "fps needs 1 <= k <= |points| (k=" + std::to_string(k) +
                    ", n=" + std::to_string(n) + ")");
  }
  const Eigen::RowVector3d c = points.colwise().mean();
  Eigen::Index seed = 0;
  (points.rowwise() - c).rowwise().squaredNorm().maxCoeff(&seed);

  std::vector<Eigen::Index> chosen{seed};
  chosen.reserve(k);
  Eigen::VectorXd min_d2 = (points.rowwise() - points.row(seed)).rowwise().squaredNorm();
  while (static_cast<int>(chosen.size()) < k) {
    Eigen::Index next = 0;
    min_d2.maxCoeff(&next);
    chosen.push_back(next);
    min_d2 = min_d2.cwiseMin((points.rowwise() - points.row(next)).rowwise().squaredNorm());
  }
  return chosen;
}

ShapePrior fps(const PointCloud& points, int k) {
  const auto idx = fps_indices(points, k);
  ShapePrior out;
  out.kind = PriorKind::kFpsModel;
  out.points.resize(k, 3);
  for (int i = 0; i < k; ++i) out.points.row(i) = points.row(idx[i]);
  return out;
}

ShapePrior mean_shape(const CategorySpec& category, int n, std::uint64_t seed) {
  if (n < 8) throw Error(ErrorKind::kInsufficientPoints, "mean shape needs n >= 8");
  Rng rng(derive_seed(hash_name(category.name), seed));
  const auto params = category.mean_params();
  const SurfaceSample surf = sample_template(category.shape, params, n, rng);
  return normalize_prior(surf.points, PriorKind::kMeanShape);
}

ShapePrior mean_shape(std::string_view category, int n, std::uint64_t seed) {
  return mean_shape(find_category(category), n, seed);
}

ShapePrior make_category_prior(PriorKind kind, const CategorySpec& category, int n_points) {
  switch (kind) {
    case PriorKind::kMeanShape: return mean_shape(category, n_points);
    case PriorKind::kBBoxCorners: return bbox_corners_prior();
    case PriorKind::kAxes: return axes_prior();
    case PriorKind::kFpsModel: break;
  }
  throw Error(ErrorKind::kInvalidConfig, "fps-model priors are built per instance");
}

}  // namespace catre
