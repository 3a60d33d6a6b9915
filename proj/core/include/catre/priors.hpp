#pragma once

#include <cstdint>
#include <string_view>

#include "catre/category.hpp"
#include "catre/geometry.hpp"

namespace catre {

enum class PriorKind { kMeanShape, kBBoxCorners, kAxes, kFpsModel };

std::string_view to_string(PriorKind kind);
PriorKind prior_kind_from_string(std::string_view name);

/// Reference point set in the normalized object frame.
struct ShapePrior {
  PointCloud points;
  PriorKind kind = PriorKind::kMeanShape;

  Eigen::Index n_points() const { return points.rows(); }
};

/// Centers at the bounding-box center and scales each axis to unit extent.
/// Throws kDegenerateExtent when an axis has zero extent.
ShapePrior normalize_prior(const PointCloud& points, PriorKind kind = PriorKind::kMeanShape);

/// The 8 corners of the unit cube centered at the origin.
ShapePrior bbox_corners_prior();

/// Origin plus the three half-extent axis tips.
ShapePrior axes_prior();

/// Greedy farthest point sampling, seeded with the point farthest from the
/// centroid. Points are returned as-is (not normalized) with kind kFpsModel.
/// Throws kInsufficientPoints when k exceeds the input size.
ShapePrior fps(const PointCloud& points, int k);

/// Index form of fps(); selection order is preserved.
std::vector<Eigen::Index> fps_indices(const PointCloud& points, int k);

/// Procedural categorical mean shape: `n` surface samples of the template at
/// its mid-range parameters, normalized. Deterministic in (category, n, seed).
ShapePrior mean_shape(const CategorySpec& category, int n, std::uint64_t seed = 0);
/// Throws kUnknownCategory for names outside the default registry.
ShapePrior mean_shape(std::string_view category, int n, std::uint64_t seed = 0);

/// Builds the prior of the requested kind for `category`. kFpsModel is not
/// categorical and is rejected here.
ShapePrior make_category_prior(PriorKind kind, const CategorySpec& category, int n_points);

}  // namespace catre
