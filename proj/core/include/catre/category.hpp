#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catre/geometry.hpp"
#include "catre/random.hpp"

namespace catre {

enum class TemplateId { kBottle, kBowl, kCan, kLaptop, kMug };

std::string_view to_string(TemplateId id);
TemplateId template_from_string(std::string_view name);

struct ParamRange {
  std::string name;
  double min = 0.0;
  double max = 0.0;
};

struct CategorySpec {
  std::string name;
  TemplateId shape = TemplateId::kCan;
  std::vector<ParamRange> shape_param_ranges;
  SymmetrySpec symmetry;

  std::vector<double> mean_params() const;
};

/// bottle, bowl, can (symmetric about object +y), laptop, mug (asymmetric).
const std::vector<CategorySpec>& default_categories();
/// Throws kUnknownCategory.
const CategorySpec& find_category(std::string_view name);

/// Surface samples with analytic outward normals, object frame (y up),
/// centered at the bounding-box center.
struct SurfaceSample {
  PointCloud points;
  PointCloud normals;
  Vec3 size = Vec3::Zero();
};

SurfaceSample sample_template(TemplateId shape, std::span<const double> params, int n_points,
                              Rng& rng);

}  // namespace catre
