#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "catre/category.hpp"
#include "catre/geometry.hpp"
#include "catre/random.hpp"

namespace catre {

struct PerturbSpec {
  double rot_std_deg = 5.0;
  double trans_std_m = 0.02;
  double size_rel_std = 0.02;
};

/// Training-time depth augmentation. Each stage fires with its own
/// probability; fractions are upper bounds drawn uniformly unless
/// `random_fraction` is false.
struct AugmentSpec {
  double p_drop = 0.5;
  double drop_frac = 0.15;
  double p_noise = 0.5;
  double noise_sigma_m = 0.002;
  double p_zero = 0.3;
  double zero_frac = 0.05;
  bool random_fraction = true;

  static AugmentSpec disabled() { return {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, true}; }
};

struct InstanceModel {
  PointCloud points;   // object frame, metric
  PointCloud normals;  // unit outward normals
  Vec3 size = Vec3::Zero();
};

struct SceneSample {
  std::string id;
  std::string category;
  PointCloud model_points;  // object frame, metric size applied
  PointCloud observed;      // camera frame
  Pose9D gt;
  Pose9D init;
  Vec3 viewpoint = Vec3::UnitZ();  // unit direction from the object toward the camera
};

struct SceneConfig {
  int n_model_points = 2048;
  int n_stored_model_points = 1024;
  int clutter_points = 32;
  double carve_frac = 0.1;
  PerturbSpec perturb;
};

InstanceModel gen_instance(const CategorySpec& category, std::uint64_t seed,
                           int n_points = 2048);

/// Rigidly places `model` with (pose.r, pose.t) and keeps the points whose
/// normal faces `viewpoint`, minus a contiguous occluded chunk of
/// `carve_frac` of them. pose.s is not applied: the model already carries
/// metric size. Throws kEmptyVisibility when fewer than 32 points survive.
PointCloud render_partial(const InstanceModel& model, const Pose9D& pose, const Vec3& viewpoint,
                          std::uint64_t carve_seed = 0, double carve_frac = 0.1);

/// Ball radius used by ball_sample for a given initial size.
double ball_radius(const Vec3& init_size);

/// Keeps points within ball_radius(init.s) of init.t and draws exactly n_o
/// of them (with replacement only when too few survive). Throws kEmptyBall.
PointCloud ball_sample(const PointCloud& points, const Pose9D& init, int n_o, Rng& rng);

PointCloud augment_depth(const PointCloud& cloud, const AugmentSpec& spec, Rng& rng);

Pose9D perturb_pose(const Pose9D& gt, const PerturbSpec& spec, Rng& rng);

/// Random tabletop-style object pose in camera frame (x right, y down, z forward).
Pose9D random_scene_pose(const Vec3& size, Rng& rng);

/// Unit direction from an object at `t` toward a camera at the origin.
Vec3 viewpoint_for(const Vec3& t);

/// Renders `model` at `gt` with clutter and a perturbed initial pose. The id
/// is left empty.
SceneSample observe_scene(const InstanceModel& model, const std::string& category,
                          const Pose9D& gt, const SceneConfig& cfg, Rng& rng);

/// One complete sample: instance, pose, partial observation with clutter,
/// perturbed initial pose. Deterministic in (seed, index).
SceneSample make_scene(const CategorySpec& category, const SceneConfig& cfg, std::uint64_t seed,
                       std::uint64_t index);

/// Samples for every category in order; worker threads each own the
/// (seed, category, index)-derived stream, so output is independent of
/// `threads`.
std::vector<SceneSample> generate_samples(const std::vector<CategorySpec>& categories,
                                          int samples_per_category, const SceneConfig& cfg,
                                          std::uint64_t seed, int threads = 1);

// ---- dataset directory format -------------------------------------------

inline constexpr std::uint32_t kDatasetVersion = 1;

struct SequenceInfo {
  std::vector<bool> consecutive;
  double angular_deg_per_frame = 0.0;
  double linear_m_per_frame = 0.0;
};

struct Dataset {
  std::vector<CategorySpec> categories;
  std::vector<SceneSample> samples;
  std::optional<SequenceInfo> sequence;
};

/// Directory with manifest.json and one binary record per sample under
/// records/. Overwrites existing files of the same names.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

/// Binary record codec ("CATR" header, little-endian f64 payload).
std::vector<unsigned char> encode_sample(const SceneSample& sample);
SceneSample decode_sample(const std::vector<unsigned char>& bytes);

}  // namespace catre
