#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "catre/autonet/model.hpp"
#include "catre/losses.hpp"
#include "catre/priors.hpp"
#include "catre/synthdata.hpp"

namespace catre {

enum class TrainMode { kCategory, kInstance };

std::string_view to_string(TrainMode mode);
TrainMode train_mode_from_string(std::string_view name);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool lookahead = false;
  int lookahead_k = 6;
  double lookahead_alpha = 0.5;
};

struct TrainConfig {
  int epochs = 120;
  int batch_size = 16;
  double base_lr = 1e-4;
  double anneal_start_frac = 0.72;
  int iters_per_sample = 4;
  PerturbSpec perturb;
  AugmentSpec augment;
  AdamConfig adam;
  TrainMode mode = TrainMode::kCategory;
  PriorKind prior = PriorKind::kMeanShape;
  double min_size = 1e-3;
  // Reuse each sample's perturbation and augmentation draw in every epoch.
  bool fixed_noise = false;
  std::uint64_t seed = 0;

  /// Throws kInvalidConfig.
  void validate() const;
};

/// Constant base_lr up to the knee, then a cosine decay reaching 0 at
/// total_steps.
double lr_schedule(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg);

template <typename T>
struct OptimizerState {
  std::int64_t t = 0;  // completed steps
  std::vector<autonet::Matrix<T>> m, v;
  std::vector<autonet::Matrix<T>> slow;  // lookahead anchors, empty when off
};

/// One adaptive-moment update. Parameters without a gradient are left
/// untouched (moments included).
template <typename T>
void optimizer_step(std::span<autonet::Tensor<T>> params, OptimizerState<T>& state, double lr,
                    const AdamConfig& cfg);

/// Everything a training step needs for one sample. The prior is shared
/// among samples of a category.
struct TrainItem {
  std::string id;
  PointCloud observed;
  Pose9D gt;
  std::shared_ptr<const ShapePrior> prior;
  SymmetrySpec sym;
};

/// Builds priors (per category, or per instance in instance mode) and
/// pairs them with the samples. n_p is the prior size for point-set priors.
std::vector<TrainItem> make_train_items(std::span<const SceneSample> samples,
                                        std::span<const CategorySpec> categories,
                                        PriorKind prior, TrainMode mode, int n_p);

/// Prior for one sample under the given mode; metric in instance mode.
std::shared_ptr<const ShapePrior> make_prior(const SceneSample& sample, const CategorySpec& cat,
                                             PriorKind prior, TrainMode mode, int n_p);

template <typename T>
struct TrainState {
  autonet::RefinerModel<T> model;
  OptimizerState<T> opt;
  std::int64_t epoch = 0;  // completed epochs
  std::int64_t step = 0;   // completed optimizer steps
};

struct EpochMetrics {
  std::int64_t epoch = 0;
  std::int64_t steps = 0;
  double lr = 0.0;
  LossBreakdown first_iter;  // mean over samples, iteration 1
  LossBreakdown last_iter;   // mean over samples, iteration K
  double mean_total = 0.0;   // mean summed-over-iterations loss
  double seconds = 0.0;
};

std::int64_t steps_per_epoch(std::size_t n_samples, const TrainConfig& cfg);

/// Per-sample loop: perturb gt, augment and ball-sample the observation,
/// run K detached refinement iterations with the loss of every iteration
/// accumulated, one optimizer step per batch. Throws kNanLoss on a
/// non-finite loss. `log` receives one JSON object per step and per epoch.
template <typename T>
EpochMetrics train_epoch(TrainState<T>& state, std::span<const TrainItem> data,
                         const TrainConfig& cfg, std::ostream* log = nullptr);

/// Runs epochs state.epoch .. cfg.epochs - 1.
template <typename T>
std::vector<EpochMetrics> train(TrainState<T>& state, std::span<const TrainItem> data,
                                const TrainConfig& cfg, std::ostream* log = nullptr,
                                const std::function<void(const EpochMetrics&)>& on_epoch = {});

/// Forward and loss for one sample at one initial pose, for diagnostics and
/// gradient checks.
template <typename T>
LossGraph<T> sample_loss(const autonet::RefinerModel<T>& model, const PointCloud& observed,
                         const ShapePrior& prior, const Pose9D& init, const Pose9D& gt,
                         const SymmetrySpec& sym);

}  // namespace catre
