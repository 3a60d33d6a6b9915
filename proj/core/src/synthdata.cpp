#include "catre/synthdata.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <thread>

namespace catre {

namespace {
constexpr int kMinVisiblePoints = 32;
constexpr double kBallRadiusFactor = 0.6;
}  // namespace

InstanceModel gen_instance(const CategorySpec& category, std::uint64_t seed, int n_points) {
  Rng rng(derive_seed(seed, hash_name(category.name)));
  std::vector<double> params;
  params.reserve(category.shape_param_ranges.size());
  for (const auto& range : category.shape_param_ranges) {
    params.push_back(uniform(rng, range.min, range.max));
  }
  SurfaceSample surf = sample_template(category.shape, params, n_points, rng);
  return {std::move(surf.points), std::move(surf.normals), surf.size};
}

PointCloud render_partial(const InstanceModel& model, const Pose9D& pose, const Vec3& viewpoint,
                          std::uint64_t carve_seed, double carve_frac) {
  if (model.points.rows() == 0) throw Error(ErrorKind::kEmptyVisibility, "empty model");
  const PointCloud placed = rigid_transform(pose.r, pose.t, model.points);
  const Eigen::VectorXd facing = (model.normals * pose.r.matrix().transpose()) * viewpoint;

  std::vector<Eigen::Index> visible;
  for (Eigen::Index i = 0; i < placed.rows(); ++i) {
    if (facing(i) > 0.0) visible.push_back(i);
  }

  if (carve_frac > 0.0 && !visible.empty()) {
    Rng rng(carve_seed);
    const auto n_carve = static_cast<std::size_t>(std::floor(carve_frac * visible.size()));
    const Eigen::Index center =
        visible[std::uniform_int_distribution<std::size_t>(0, visible.size() - 1)(rng)];
    std::vector<std::pair<double, Eigen::Index>> by_dist;
    by_dist.reserve(visible.size());
    for (Eigen::Index i : visible) {
      by_dist.emplace_back((placed.row(i) - placed.row(center)).squaredNorm(), i);
    }
    std::sort(by_dist.begin(), by_dist.end());
    std::vector<Eigen::Index> kept;
    kept.reserve(visible.size() - n_carve);
    for (std::size_t j = n_carve; j < by_dist.size(); ++j) kept.push_back(by_dist[j].second);
    std::sort(kept.begin(), kept.end());
    visible = std::move(kept);
  }

  if (static_cast<int>(visible.size()) < kMinVisiblePoints) {
    throw Error(ErrorKind::kEmptyVisibility,
                "only " + std::to_string(visible.size()) + " points visible");
  }
  PointCloud out(static_cast<Eigen::Index>(visible.size()), 3);
  for (std::size_t j = 0; j < visible.size(); ++j) out.row(j) = placed.row(visible[j]);
  return out;
}

double ball_radius(const Vec3& init_size) { return kBallRadiusFactor * init_size.norm(); }

PointCloud ball_sample(const PointCloud& points, const Pose9D& init, int n_o, Rng& rng) {
  const double r2 = std::pow(ball_radius(init.s), 2);
  std::vector<Eigen::Index> inside;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    if ((points.row(i).transpose() - init.t).squaredNorm() <= r2) inside.push_back(i);
  }
  if (inside.empty()) throw Error(ErrorKind::kEmptyBall, "no point inside the sampling ball");

  PointCloud out(n_o, 3);
  if (static_cast<int>(inside.size()) >= n_o) {
    // Partial Fisher-Yates: first n_o entries become a uniform subset.
    for (int i = 0; i < n_o; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, inside.size() - 1);
      std::swap(inside[i], inside[pick(rng)]);
      out.row(i) = points.row(inside[i]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, inside.size() - 1);
    for (int i = 0; i < n_o; ++i) out.row(i) = points.row(inside[pick(rng)]);
  }
  return out;
}

PointCloud augment_depth(const PointCloud& cloud, const AugmentSpec& spec, Rng& rng) {
  auto fraction = [&](double max_frac) {
    return spec.random_fraction ? uniform(rng, 0.0, max_frac) : max_frac;
  };
  PointCloud out = cloud;

  if (spec.p_drop > 0.0 && uniform(rng) < spec.p_drop) {
    const double f = fraction(spec.drop_frac);
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      if (uniform(rng) >= f) kept.push_back(i);
    }
    PointCloud dropped(static_cast<Eigen::Index>(kept.size()), 3);
    for (std::size_t j = 0; j < kept.size(); ++j) dropped.row(j) = out.row(kept[j]);
    out = std::move(dropped);
  }
  if (spec.p_noise > 0.0 && spec.noise_sigma_m > 0.0 && uniform(rng) < spec.p_noise) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma_m);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      for (int c = 0; c < 3; ++c) out(i, c) += noise(rng);
    }
  }
  if (spec.p_zero > 0.0 && uniform(rng) < spec.p_zero) {
    const double f = fraction(spec.zero_frac);
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      if (uniform(rng) < f) out.row(i).setZero();
    }
  }
  return out;
}

Pose9D perturb_pose(const Pose9D& gt, const PerturbSpec& spec, Rng& rng) {
  Pose9D out = gt;
  const Vec3 axis = random_unit_vector(rng);
  const double angle = std::abs(gaussian(rng, spec.rot_std_deg)) * std::numbers::pi / 180.0;
  out.r = Rotation::from_axis_angle(axis, angle) * gt.r;
  for (int c = 0; c < 3; ++c) out.t(c) += gaussian(rng, spec.trans_std_m);
  for (int c = 0; c < 3; ++c) {
    out.s(c) = std::max(gt.s(c) * (1.0 + gaussian(rng, spec.size_rel_std)), 1e-4 * gt.s(c));
  }
  return out;
}

Vec3 viewpoint_for(const Vec3& t) { return -t.normalized(); }

Pose9D random_scene_pose(const Vec3& size, Rng& rng) {
  const double deg = std::numbers::pi / 180.0;
  const double elevation = uniform(rng, 20.0, 70.0) * deg;
  const double yaw = uniform(rng, 0.0, 360.0) * deg;
  const Vec3 up(0.0, -std::cos(elevation), -std::sin(elevation));
  const Vec3 x = std::cos(yaw) * Vec3::UnitX() + std::sin(yaw) * up.cross(Vec3::UnitX());
  Mat3 m;
  m.col(0) = x;
  m.col(1) = up;
  m.col(2) = x.cross(up);

  Pose9D pose;
  pose.r = Rotation::from_matrix_unchecked(m);
  pose.t = Vec3(uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1), uniform(rng, 0.55, 0.9));
  pose.s = size;
  return pose;
}

SceneSample observe_scene(const InstanceModel& model, const std::string& category,
                          const Pose9D& gt, const SceneConfig& cfg, Rng& rng) {
  SceneSample s;
  s.category = category;
  s.gt = gt;
  s.viewpoint = viewpoint_for(s.gt.t);

  const PointCloud visible = render_partial(model, s.gt, s.viewpoint, rng(), cfg.carve_frac);
  s.observed.resize(visible.rows() + cfg.clutter_points, 3);
  s.observed.topRows(visible.rows()) = visible;
  for (int i = 0; i < cfg.clutter_points; ++i) {
    for (int c = 0; c < 3; ++c) {
      s.observed(visible.rows() + i, c) = s.gt.t(c) + uniform(rng, -0.3, 0.3);
    }
  }

  const int n_keep = std::min<int>(cfg.n_stored_model_points, static_cast<int>(model.points.rows()));
  s.model_points = model.points.topRows(n_keep);
  s.init = perturb_pose(s.gt, cfg.perturb, rng);
  return s;
}

SceneSample make_scene(const CategorySpec& category, const SceneConfig& cfg, std::uint64_t seed,
                       std::uint64_t index) {
  Rng rng(derive_seed(seed, hash_name(category.name), index));
  const InstanceModel model = gen_instance(category, rng(), cfg.n_model_points);
  const Pose9D gt = random_scene_pose(model.size, rng);
  SceneSample s = observe_scene(model, category.name, gt, cfg, rng);
  char id[64];
  std::snprintf(id, sizeof(id), "%s_%06llu", category.name.c_str(),
                static_cast<unsigned long long>(index));
  s.id = id;
  return s;
}

std::vector<SceneSample> generate_samples(const std::vector<CategorySpec>& categories,
                                          int samples_per_category, const SceneConfig& cfg,
                                          std::uint64_t seed, int threads) {
  const std::size_t total = categories.size() * static_cast<std::size_t>(samples_per_category);
  std::vector<SceneSample> out(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (std::size_t job = next++; job < total && !failed; job = next++) {
      try {
        const auto& cat = categories[job / samples_per_category];
        out[job] = make_scene(cat, cfg, seed, job % samples_per_category);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, threads);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace catre
