#include "catre/train.hpp"

#include <chrono>
#include <cmath>
#include <algorithm>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace catre {

using autonet::Matrix;
using autonet::Tensor;

std::string_view to_string(TrainMode mode) {
  return mode == TrainMode::kCategory ? "category" : "instance";
}

TrainMode train_mode_from_string(std::string_view name) {
  if (name == "category") return TrainMode::kCategory;
  if (name == "instance") return TrainMode::kInstance;
  throw Error(ErrorKind::kInvalidConfig, "unknown training mode '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::kInvalidConfig, what); };
  if (epochs < 0) fail("epochs must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(base_lr >= 0.0)) fail("base_lr must be >= 0");
  if (!(anneal_start_frac > 0.0 && anneal_start_frac < 1.0)) fail("anneal_start_frac must be in (0, 1)");
  if (iters_per_sample < 1) fail("iters_per_sample must be >= 1");
  if (perturb.rot_std_deg < 0 || perturb.trans_std_m < 0 || perturb.size_rel_std < 0) {
    fail("perturbation scales must be >= 0");
  }
  if (adam.lookahead && (adam.lookahead_k < 1 || adam.lookahead_alpha <= 0 || adam.lookahead_alpha > 1)) {
    fail("lookahead needs k >= 1 and alpha in (0, 1]");
  }
  if (mode == TrainMode::kInstance && prior != PriorKind::kBBoxCorners && prior != PriorKind::kFpsModel) {
    fail("instance mode needs a bbox-corners or fps-model prior");
  }
  if (mode == TrainMode::kCategory && prior == PriorKind::kFpsModel) {
    fail("fps-model priors are instance-specific; use instance mode");
  }
  if (!(min_size > 0.0)) fail("min_size must be > 0");
}

double lr_schedule(std::int64_t step, std::int64_t total_steps, const TrainConfig& cfg) {
  if (total_steps <= 0) return cfg.base_lr;
  const double knee = cfg.anneal_start_frac * static_cast<double>(total_steps);
  const double s = static_cast<double>(std::clamp<std::int64_t>(step, 0, total_steps));
  if (s <= knee) return cfg.base_lr;
  const double progress = (s - knee) / (static_cast<double>(total_steps) - knee);
  return cfg.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
void optimizer_step(std::span<Tensor<T>> params, OptimizerState<T>& state, double lr,
                    const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.push_back(Matrix<T>::Zero(p.rows(), p.cols()));
      state.v.push_back(Matrix<T>::Zero(p.rows(), p.cols()));
      if (cfg.lookahead) state.slow.push_back(p.value());
    }
  }
  if (state.m.size() != params.size()) {
    throw Error(ErrorKind::kShapeMismatch, "optimizer state does not match the parameter list");
  }
  if (cfg.lookahead && state.slow.empty()) {
    for (const auto& p : params) state.slow.push_back(p.value());
  }
  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T step_size = static_cast<T>(lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(cfg.eps);
  const T decay = static_cast<T>(lr * cfg.weight_decay);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = params[i];
    if (!p.has_grad()) continue;
    const Matrix<T>& g = p.grad();
    if (g.rows() != p.rows() || g.cols() != p.cols() || state.m[i].rows() != p.rows() ||
        state.m[i].cols() != p.cols()) {
      throw Error(ErrorKind::kShapeMismatch, "gradient / moment shape mismatch");
    }
    Matrix<T>& m = state.m[i];
    Matrix<T>& v = state.v[i];
    m = b1 * m + (T(1) - b1) * g;
    v = b2 * v + (T(1) - b2) * g.cwiseProduct(g);
    Matrix<T>& w = p.mutable_value();
    if (cfg.weight_decay != 0.0) w -= decay * w;
    w.array() -= step_size * m.array() / (v.array().sqrt() * inv_sqrt_bc2 + eps);
  }

  if (cfg.lookahead && state.t % cfg.lookahead_k == 0) {
    const T alpha = static_cast<T>(cfg.lookahead_alpha);
    for (std::size_t i = 0; i < params.size(); ++i) {
      Matrix<T>& slow = state.slow[i];
      slow += alpha * (params[i].value() - slow);
      params[i].mutable_value() = slow;
    }
  }
}

std::shared_ptr<const ShapePrior> make_prior(const SceneSample& sample, const CategorySpec& cat,
                                             PriorKind prior, TrainMode mode, int n_p) {
  if (mode == TrainMode::kCategory) {
    return std::make_shared<const ShapePrior>(make_category_prior(prior, cat, n_p));
  }
  ShapePrior p;
  if (prior == PriorKind::kFpsModel) {
    p = fps(sample.model_points, n_p);
  } else if (prior == PriorKind::kBBoxCorners) {
    // The instance's metric extent is known exactly.
    p = bbox_corners_prior();
    p.points = p.points * sample.gt.s.asDiagonal();
  } else {
    throw Error(ErrorKind::kInvalidConfig, "instance mode needs a bbox-corners or fps-model prior");
  }
  return std::make_shared<const ShapePrior>(std::move(p));
}

std::vector<TrainItem> make_train_items(std::span<const SceneSample> samples,
                                        std::span<const CategorySpec> categories,
                                        PriorKind prior, TrainMode mode, int n_p) {
  auto find = [&](const std::string& name) -> const CategorySpec& {
    for (const auto& c : categories) {
      if (c.name == name) return c;
    }
    return find_category(name);
  };
  std::vector<std::pair<std::string, std::shared_ptr<const ShapePrior>>> cache;
  std::vector<TrainItem> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    const CategorySpec& cat = find(s.category);
    std::shared_ptr<const ShapePrior> p;
    if (mode == TrainMode::kCategory) {
      for (const auto& [name, cached] : cache) {
        if (name == s.category) p = cached;
      }
      if (!p) {
        p = make_prior(s, cat, prior, mode, n_p);
        cache.emplace_back(s.category, p);
      }
    } else {
      p = make_prior(s, cat, prior, mode, n_p);
    }
    out.push_back({s.id, s.observed, s.gt, std::move(p), cat.symmetry});
  }
  return out;
}

std::int64_t steps_per_epoch(std::size_t n_samples, const TrainConfig& cfg) {
  return (static_cast<std::int64_t>(n_samples) + cfg.batch_size - 1) / cfg.batch_size;
}

template <typename T>
LossGraph<T> sample_loss(const autonet::RefinerModel<T>& model, const PointCloud& observed,
                         const ShapePrior& prior, const Pose9D& init, const Pose9D& gt,
                         const SymmetrySpec& sym) {
  const auto graph = autonet::forward_refine_graph(observed, prior, init, model);
  return total_loss_graph(gt, graph, prior, sym, model.hyper().predict_size);
}

namespace {

void add_into(LossBreakdown& acc, const LossBreakdown& b) {
  acc.l_pm += b.l_pm;
  acc.l_rot += b.l_rot;
  acc.l_t += b.l_t;
  acc.l_s += b.l_s;
  acc.total += b.total;
}

LossBreakdown scaled(LossBreakdown b, double f) {
  b.l_pm *= f;
  b.l_rot *= f;
  b.l_t *= f;
  b.l_s *= f;
  b.total *= f;
  return b;
}

nlohmann::json to_json(const LossBreakdown& b) {
  return {{"l_pm", b.l_pm}, {"l_rot", b.l_rot}, {"l_t", b.l_t}, {"l_s", b.l_s}, {"total", b.total}};
}

std::string pose_text(const Pose9D& p) {
  std::ostringstream os;
  os.precision(17);
  os << "R=[" << p.r.matrix().reshaped<Eigen::RowMajor>().transpose() << "] t=[" << p.t.transpose()
     << "] s=[" << p.s.transpose() << "]";
  return os.str();
}

}  // namespace

template <typename T>
EpochMetrics train_epoch(TrainState<T>& state, std::span<const TrainItem> data,
                         const TrainConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorKind::kDegenerateInput, "training set is empty");
  const auto t0 = std::chrono::steady_clock::now();
  const int n_o = state.model.hyper().n_o;
  const std::int64_t per_epoch = steps_per_epoch(data.size(), cfg);
  const std::int64_t total_steps = per_epoch * cfg.epochs;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(state.epoch), ~0ULL));
  std::shuffle(order.begin(), order.end(), shuffle_rng);

  auto named = state.model.named_parameters();
  std::vector<Tensor<T>> params;
  params.reserve(named.size());
  for (auto& [name, p] : named) params.push_back(p);

  EpochMetrics em;
  em.epoch = state.epoch;
  double total_acc = 0.0;
  const T inv_batch_full = T(1) / static_cast<T>(cfg.batch_size);

  for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
    const T inv_batch = end - start == static_cast<std::size_t>(cfg.batch_size)
                            ? inv_batch_full
                            : T(1) / static_cast<T>(end - start);
    state.model.zero_grad();
    LossBreakdown batch_first, batch_last;
    double batch_total = 0.0;

    for (std::size_t j = start; j < end; ++j) {
      const std::size_t idx = order[j];
      const TrainItem& item = data[idx];
      Rng rng(derive_seed(cfg.seed, cfg.fixed_noise ? 0 : static_cast<std::uint64_t>(state.epoch), idx));
      Pose9D init = perturb_pose(item.gt, cfg.perturb, rng);
      const PointCloud augmented = augment_depth(item.observed, cfg.augment, rng);
      const PointCloud points = ball_sample(augmented, init, n_o, rng);

      double sample_total = 0.0;
      for (int k = 0; k < cfg.iters_per_sample; ++k) {
        const auto graph = autonet::forward_refine_graph(points, *item.prior, init, state.model);
        const auto loss =
            total_loss_graph(item.gt, graph, *item.prior, item.sym, state.model.hyper().predict_size);
        const LossBreakdown b = loss.values();
        if (!std::isfinite(b.total)) {
          std::ostringstream os;
          os << "non-finite loss at epoch " << state.epoch << " step " << state.step << " sample "
             << item.id << " iteration " << k + 1 << " (l_pm " << b.l_pm << ", l_rot " << b.l_rot
             << ", l_t " << b.l_t << ", l_s " << b.l_s << "); init " << pose_text(init) << "; gt "
             << pose_text(item.gt);
          throw Error(ErrorKind::kNanLoss, os.str());
        }
        scale(loss.total, inv_batch).backward();
        if (k == 0) add_into(batch_first, b);
        if (k == cfg.iters_per_sample - 1) add_into(batch_last, b);
        sample_total += b.total;
        init = graph.estimate(cfg.min_size);
      }
      batch_total += sample_total;
    }

    const double lr = lr_schedule(state.step, total_steps, cfg);
    optimizer_step<T>(params, state.opt, lr, cfg.adam);
    ++state.step;
    em.lr = lr;
    add_into(em.first_iter, batch_first);
    add_into(em.last_iter, batch_last);
    total_acc += batch_total;
    if (log) {
      const double n = static_cast<double>(end - start);
      nlohmann::json line = {{"type", "step"},
                             {"epoch", state.epoch},
                             {"step", state.step},
                             {"lr", lr},
                             {"loss", batch_total / n},
                             {"first_iter", to_json(scaled(batch_first, 1.0 / n))},
                             {"last_iter", to_json(scaled(batch_last, 1.0 / n))}};
      *log << line.dump() << '\n';
    }
  }

  const double inv_n = 1.0 / static_cast<double>(data.size());
  em.first_iter = scaled(em.first_iter, inv_n);
  em.last_iter = scaled(em.last_iter, inv_n);
  em.mean_total = total_acc * inv_n;
  em.steps = per_epoch;
  em.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ++state.epoch;
  if (log) {
    nlohmann::json line = {{"type", "epoch"},
                           {"epoch", em.epoch},
                           {"step", state.step},
                           {"lr", em.lr},
                           {"mean_loss", em.mean_total},
                           {"first_iter", to_json(em.first_iter)},
                           {"last_iter", to_json(em.last_iter)},
                           {"seconds", em.seconds}};
    *log << line.dump() << '\n';
    log->flush();
  }
  return em;
}

template <typename T>
std::vector<EpochMetrics> train(TrainState<T>& state, std::span<const TrainItem> data,
                                const TrainConfig& cfg, std::ostream* log,
                                const std::function<void(const EpochMetrics&)>& on_epoch) {
  std::vector<EpochMetrics> out;
  while (state.epoch < cfg.epochs) {
    out.push_back(train_epoch(state, data, cfg, log));
    if (on_epoch) on_epoch(out.back());
  }
  return out;
}

#define CATRE_INSTANTIATE(T)                                                                     \
  template void optimizer_step(std::span<Tensor<T>>, OptimizerState<T>&, double,                 \
                               const AdamConfig&);                                               \
  template EpochMetrics train_epoch(TrainState<T>&, std::span<const TrainItem>,                  \
                                    const TrainConfig&, std::ostream*);                          \
  template std::vector<EpochMetrics> train(TrainState<T>&, std::span<const TrainItem>,           \
                                           const TrainConfig&, std::ostream*,                    \
                                           const std::function<void(const EpochMetrics&)>&);     \
  template LossGraph<T> sample_loss(const autonet::RefinerModel<T>&, const PointCloud&,          \
                                    const ShapePrior&, const Pose9D&, const Pose9D&,             \
                                    const SymmetrySpec&);

CATRE_INSTANTIATE(float)
CATRE_INSTANTIATE(double)
#undef CATRE_INSTANTIATE

}  // namespace catre
