#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "catre/autonet/model.hpp"
#include "catre/eval.hpp"
#include "catre/priors.hpp"
#include "catre/synthdata.hpp"

namespace catre {

/// Runs K refinement iterations from `init` on one ball-sampled subset of
/// `observed`. Returns init followed by the pose after each iteration. Sizes
/// are floored at `min_size` between iterations.
template <typename T>
std::vector<Pose9D> refine_iterations(const PointCloud& observed, const ShapePrior& prior,
                                      const Pose9D& init, const autonet::RefinerModel<T>& model,
                                      int iters, Rng& rng, double min_size = 1e-3);

/// Refines every sample from its stored init with one prior per sample (as
/// built by make_train_items). Per-sample randomness derives from (seed,
/// index), so results do not depend on `threads`.
template <typename T>
PredictionFile refine_dataset(const autonet::RefinerModel<T>& model, const Dataset& dataset,
                              PriorKind prior, bool instance_mode, int iters, std::uint64_t seed,
                              int threads = 1);

// ---- sequences ----------------------------------------------------------

struct MotionSpec {
  double angular_deg_per_frame = 5.0;
  double linear_m_per_frame = 0.01;
};

struct SequenceConfig {
  int length = 50;
  MotionSpec motion;
  std::vector<int> discontinuities;  // frames that jump to an unrelated pose
  SceneConfig scene;
};

struct Sequence {
  std::string category;
  std::vector<SceneSample> frames;
  std::vector<bool> consecutive;  // consecutive[0] is false
  MotionSpec motion;
};

/// One instance moving smoothly: each step turns by at most the angular
/// bound and moves by at most the linear bound, staying inside a camera-facing
/// box. Frames listed in `discontinuities` jump to a fresh random pose and are
/// flagged non-consecutive. Throws kInvalidConfig for length < 2 or
/// out-of-range discontinuity frames.
Sequence gen_sequence(const CategorySpec& category, const SequenceConfig& cfg, std::uint64_t seed);

Dataset sequence_to_dataset(const Sequence& seq, const CategorySpec& category);
/// Throws kFormat when the dataset carries no per-frame flags.
Sequence sequence_from_dataset(const Dataset& dataset);

// ---- tracking -------------------------------------------------------------

/// Anything that turns an initial pose for a frame into a refined one.
class PoseRefiner {
 public:
  virtual ~PoseRefiner() = default;
  virtual Pose9D refine(const SceneSample& frame, const Pose9D& init, int iters, Rng& rng) = 0;
};

/// Returns the frame's ground truth regardless of input. Exercises the
/// tracking plumbing independently of learning.
class OracleRefiner final : public PoseRefiner {
 public:
  Pose9D refine(const SceneSample& frame, const Pose9D& init, int iters, Rng& rng) override;
};

template <typename T>
class NetworkRefiner final : public PoseRefiner {
 public:
  NetworkRefiner(autonet::RefinerModel<T> model, std::shared_ptr<const ShapePrior> prior)
      : model_(std::move(model)), prior_(std::move(prior)) {}
  Pose9D refine(const SceneSample& frame, const Pose9D& init, int iters, Rng& rng) override;

 private:
  autonet::RefinerModel<T> model_;
  std::shared_ptr<const ShapePrior> prior_;
};

struct TrackConfig {
  int iters = 1;
  PerturbSpec perturb;
  std::uint64_t seed = 0;
};

struct TrackFrame {
  int frame = 0;
  Pose9D init;
  Pose9D pose;
  bool reinit = false;  // initialized from perturbed ground truth
  bool lost = false;    // no observed point near the initial pose; init kept
  double r_err_deg = 0.0;
  double t_err_cm = 0.0;
};

struct TrackResult {
  std::vector<TrackFrame> frames;
  /// Frames after the first where the tracker re-initialized.
  std::vector<int> reinit_frames;
  std::vector<EvalRecord> records(const Sequence& seq, const SymmetrySpec& sym) const;
};

/// Frame 0 and every non-consecutive frame start from perturbed ground
/// truth; other frames start from the previous output.
TrackResult track_sequence(const Sequence& seq, PoseRefiner& refiner, const SymmetrySpec& sym,
                           const TrackConfig& cfg);

nlohmann::json track_frame_json(const TrackFrame& f);

// ---- throughput -----------------------------------------------------------

struct BenchConfig {
  int iters = 4;
  int n_o = 1024;
  int n_p = 1024;
  int runs = 100;
  int warmup = 5;
  std::uint64_t seed = 0;
};

struct BenchReport {
  int iters = 0;
  int runs = 0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  double hz = 0.0;  // refinements (all K iterations) per second, from mean_ms
  std::vector<double> per_iteration_ms;  // mean time of iteration k
};

/// Times full K-iteration refinements on one synthetic sample. The model's
/// n_o/n_p must match the config.
template <typename T>
BenchReport bench_throughput(const autonet::RefinerModel<T>& model, const BenchConfig& cfg);

nlohmann::json bench_json(const BenchReport& r);

}  // namespace catre
