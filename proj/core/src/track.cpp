#include "catre/track.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <atomic>
#include <mutex>
#include <numeric>
#include <thread>

#include "catre/train.hpp"

#include "json_codec.hpp"

namespace catre {

using autonet::RefinerModel;

template <typename T>
std::vector<Pose9D> refine_iterations(const PointCloud& observed, const ShapePrior& prior,
                                      const Pose9D& init, const RefinerModel<T>& model, int iters,
                                      Rng& rng, double min_size) {
  std::vector<Pose9D> trace{init};
  if (iters <= 0) return trace;
  const PointCloud pts = ball_sample(observed, init, model.hyper().n_o, rng);
  for (int k = 0; k < iters; ++k) {
    trace.push_back(autonet::forward_refine_graph(pts, prior, trace.back(), model).estimate(min_size));
  }
  return trace;
}

template <typename T>
PredictionFile refine_dataset(const RefinerModel<T>& model, const Dataset& dataset, PriorKind prior,
                              bool instance_mode, int iters, std::uint64_t seed, int threads) {
  const auto items = make_train_items(dataset.samples, dataset.categories, prior,
                                      instance_mode ? TrainMode::kInstance : TrainMode::kCategory,
                                      model.hyper().n_p);
  const std::size_t n = items.size();
  PredictionFile out;
  out.iters = iters;
  out.predictions.resize(n);
  std::vector<std::vector<double>> seconds(n);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        using Clock = std::chrono::steady_clock;
        const SceneSample& s = dataset.samples[i];
        Rng rng(derive_seed(seed, i));
        Prediction& p = out.predictions[i];
        p.id = s.id;
        p.trace = {s.init};
        seconds[i] = {0.0};
        if (iters > 0) {
          const auto start = Clock::now();
          const PointCloud pts = ball_sample(s.observed, s.init, model.hyper().n_o, rng);
          for (int k = 0; k < iters; ++k) {
            p.trace.push_back(
                autonet::forward_refine_graph(pts, *items[i].prior, p.trace.back(), model).estimate());
            seconds[i].push_back(std::chrono::duration<double>(Clock::now() - start).count());
          }
        }
        p.pred = p.trace.back();
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  for (int k = 0; k <= iters; ++k) {
    IterationStat stat;
    stat.iter = k;
    for (std::size_t i = 0; i < n; ++i) {
      const PoseError e = pose_error(items[i].gt, out.predictions[i].trace[k], items[i].sym);
      stat.mean_r_deg += e.r_deg;
      stat.mean_t_cm += e.t_cm;
      stat.rate_5deg_2cm += (e.r_deg <= 5.0 && e.t_cm <= 2.0) ? 1.0 : 0.0;
      stat.seconds += seconds[i][k];
    }
    if (n > 0) {
      const double inv = 1.0 / static_cast<double>(n);
      stat.mean_r_deg *= inv;
      stat.mean_t_cm *= inv;
      stat.rate_5deg_2cm *= inv;
      stat.seconds *= inv;
    }
    out.per_iteration.push_back(stat);
  }
  return out;
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Region the trajectory stays in (camera frame, meters).
const Vec3 kBoxLo(-0.15, -0.15, 0.5);
const Vec3 kBoxHi(0.15, 0.15, 1.0);

Vec3 wander(const Vec3& dir, Rng& rng) { return (dir + 0.3 * random_unit_vector(rng)).normalized(); }

}  // namespace

Sequence gen_sequence(const CategorySpec& category, const SequenceConfig& cfg, std::uint64_t seed) {
  if (cfg.length < 2) throw Error(ErrorKind::kInvalidConfig, "sequence length must be >= 2");
  if (cfg.motion.angular_deg_per_frame < 0 || cfg.motion.linear_m_per_frame < 0) {
    throw Error(ErrorKind::kInvalidConfig, "motion bounds must be >= 0");
  }
  for (int f : cfg.discontinuities) {
    if (f < 1 || f >= cfg.length) {
      throw Error(ErrorKind::kInvalidConfig,
                  "discontinuity frame " + std::to_string(f) + " outside [1, length)");
    }
  }
  Rng rng(derive_seed(seed, hash_name(category.name)));
  const InstanceModel model = gen_instance(category, rng(), cfg.scene.n_model_points);
  Pose9D pose = random_scene_pose(model.size, rng);
  Vec3 spin_axis = random_unit_vector(rng);
  Vec3 heading = random_unit_vector(rng);

  Sequence seq;
  seq.category = category.name;
  seq.motion = cfg.motion;
  for (int f = 0; f < cfg.length; ++f) {
    bool consecutive = f > 0;
    if (f > 0) {
      if (std::find(cfg.discontinuities.begin(), cfg.discontinuities.end(), f) !=
          cfg.discontinuities.end()) {
        pose = random_scene_pose(model.size, rng);
        consecutive = false;
      } else {
        spin_axis = wander(spin_axis, rng);
        heading = wander(heading, rng);
        const double angle = cfg.motion.angular_deg_per_frame * kDeg * uniform(rng, 0.5, 1.0);
        const double dist = cfg.motion.linear_m_per_frame * uniform(rng, 0.5, 1.0);
        if (angle > 0.0) pose.r = Rotation::from_axis_angle(spin_axis, angle) * pose.r;
        if (dist > 0.0) {
          // Bounce off the walls of the box by flipping the offending component.
          for (int c = 0; c < 3; ++c) {
            const double next = pose.t(c) + dist * heading(c);
            if (next < kBoxLo(c) || next > kBoxHi(c)) heading(c) = -heading(c);
          }
          pose.t += dist * heading;
        }
      }
    }
    SceneSample frame = observe_scene(model, category.name, pose, cfg.scene, rng);
    char id[96];
    std::snprintf(id, sizeof(id), "%s_f%04d", category.name.c_str(), f);
    frame.id = id;
    seq.frames.push_back(std::move(frame));
    seq.consecutive.push_back(consecutive);
  }
  return seq;
}

Dataset sequence_to_dataset(const Sequence& seq, const CategorySpec& category) {
  Dataset d;
  d.categories = {category};
  d.samples = seq.frames;
  d.sequence = SequenceInfo{seq.consecutive, seq.motion.angular_deg_per_frame,
                            seq.motion.linear_m_per_frame};
  return d;
}

Sequence sequence_from_dataset(const Dataset& dataset) {
  if (!dataset.sequence) throw Error(ErrorKind::kFormat, "dataset has no sequence flags");
  if (dataset.sequence->consecutive.size() != dataset.samples.size()) {
    throw Error(ErrorKind::kFormat, "sequence flag count does not match frame count");
  }
  Sequence seq;
  seq.category = dataset.samples.empty() ? std::string() : dataset.samples.front().category;
  seq.frames = dataset.samples;
  seq.consecutive = dataset.sequence->consecutive;
  seq.motion = {dataset.sequence->angular_deg_per_frame, dataset.sequence->linear_m_per_frame};
  return seq;
}

Pose9D OracleRefiner::refine(const SceneSample& frame, const Pose9D&, int, Rng&) { return frame.gt; }

template <typename T>
Pose9D NetworkRefiner<T>::refine(const SceneSample& frame, const Pose9D& init, int iters, Rng& rng) {
  return refine_iterations(frame.observed, *prior_, init, model_, iters, rng).back();
}

std::vector<EvalRecord> TrackResult::records(const Sequence& seq, const SymmetrySpec& sym) const {
  std::vector<EvalRecord> out;
  for (const auto& f : frames) {
    const auto& frame = seq.frames[f.frame];
    out.push_back({frame.id, frame.category, frame.gt, f.pose, sym, frame.model_points});
  }
  return out;
}

TrackResult track_sequence(const Sequence& seq, PoseRefiner& refiner, const SymmetrySpec& sym,
                           const TrackConfig& cfg) {
  if (seq.consecutive.size() != seq.frames.size()) {
    throw Error(ErrorKind::kInvalidConfig, "sequence flag count does not match frame count");
  }
  TrackResult result;
  Pose9D previous;
  for (std::size_t f = 0; f < seq.frames.size(); ++f) {
    const SceneSample& frame = seq.frames[f];
    Rng rng(derive_seed(cfg.seed, f));
    TrackFrame out;
    out.frame = static_cast<int>(f);
    out.reinit = f == 0 || !seq.consecutive[f];
    out.init = out.reinit ? perturb_pose(frame.gt, cfg.perturb, rng) : previous;
    try {
      out.pose = refiner.refine(frame, out.init, cfg.iters, rng);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kEmptyBall) throw;
      out.pose = out.init;
      out.lost = true;
    }
    const PoseError err = pose_error(frame.gt, out.pose, sym);
    out.r_err_deg = err.r_deg;
    out.t_err_cm = err.t_cm;
    if (f > 0 && out.reinit) result.reinit_frames.push_back(out.frame);
    previous = out.pose;
    result.frames.push_back(out);
  }
  return result;
}

nlohmann::json track_frame_json(const TrackFrame& f) {
  return {{"frame", f.frame},
          {"pose", detail::pose_to_json(f.pose)},
          {"r_err_deg", f.r_err_deg},
          {"t_err_cm", f.t_err_cm},
          {"reinit", f.reinit},
          {"lost", f.lost}};
}

template <typename T>
BenchReport bench_throughput(const RefinerModel<T>& model, const BenchConfig& cfg) {
  const auto& h = model.hyper();
  if (h.n_o != cfg.n_o || h.n_p != cfg.n_p) {
    throw Error(ErrorKind::kInvalidConfig, "bench point counts do not match the model");
  }
  if (cfg.runs < 1 || cfg.iters < 1) throw Error(ErrorKind::kInvalidConfig, "bench needs runs, iters >= 1");
  const CategorySpec& cat = find_category("mug");
  const SceneSample sample = make_scene(cat, SceneConfig{}, cfg.seed, 0);
  ShapePrior prior = mean_shape(cat, cfg.n_p, cfg.seed);
  if (!h.predict_size) prior.points = prior.points.array().rowwise() * sample.gt.s.transpose().array();

  using Clock = std::chrono::steady_clock;
  std::vector<double> totals;
  std::vector<double> per_iter(cfg.iters, 0.0);
  for (int run = -cfg.warmup; run < cfg.runs; ++run) {
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(run + cfg.warmup)));
    const auto start = Clock::now();
    const PointCloud pts = ball_sample(sample.observed, sample.init, cfg.n_o, rng);
    Pose9D pose = sample.init;
    auto mark = Clock::now();
    for (int k = 0; k < cfg.iters; ++k) {
      pose = autonet::forward_refine_graph(pts, prior, pose, model).estimate();
      const auto now = Clock::now();
      if (run >= 0) per_iter[k] += std::chrono::duration<double, std::milli>(now - mark).count();
      mark = now;
    }
    if (run >= 0) totals.push_back(std::chrono::duration<double, std::milli>(mark - start).count());
  }

  BenchReport r;
  r.iters = cfg.iters;
  r.runs = cfg.runs;
  r.mean_ms = std::accumulate(totals.begin(), totals.end(), 0.0) / static_cast<double>(totals.size());
  std::sort(totals.begin(), totals.end());
  const auto p95 = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(totals.size()))) - 1;
  r.p95_ms = totals[std::min(p95, totals.size() - 1)];
  r.hz = 1000.0 / r.mean_ms;
  for (double& v : per_iter) v /= static_cast<double>(cfg.runs);
  r.per_iteration_ms = per_iter;
  return r;
}

nlohmann::json bench_json(const BenchReport& r) {
  return {{"iters", r.iters},   {"runs", r.runs}, {"mean_ms", r.mean_ms},
          {"p95_ms", r.p95_ms}, {"hz", r.hz},     {"per_iteration_ms", r.per_iteration_ms}};
}

#define CATRE_INSTANTIATE(T)                                                                    \
  template std::vector<Pose9D> refine_iterations(const PointCloud&, const ShapePrior&,          \
                                                 const Pose9D&, const RefinerModel<T>&, int,    \
                                                 Rng&, double);                                 \
  template class NetworkRefiner<T>;                                                             \
  template PredictionFile refine_dataset(const RefinerModel<T>&, const Dataset&, PriorKind,     \
                                         bool, int, std::uint64_t, int);                        \
  template BenchReport bench_throughput(const RefinerModel<T>&, const BenchConfig&);

CATRE_INSTANTIATE(float)
CATRE_INSTANTIATE(double)
#undef CATRE_INSTANTIATE

}  // namespace catre
