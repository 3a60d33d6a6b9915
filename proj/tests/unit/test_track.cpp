#include <gtest/gtest.h>

#include <filesystem>

#include "catre/track.hpp"
#include "catre/train.hpp"

using namespace catre;
namespace fs = std::filesystem;

namespace {

autonet::ModelHyper small_hyper(int n = 64) {
  autonet::ModelHyper h;
  h.n_o = n;
  h.n_p = n;
  h.point_dim = 16;
  h.global_dim = 64;
  h.enc_hidden = 16;
  h.enc_wide = 32;
  h.rot_hidden = 32;
  h.gn_groups = 4;
  h.ts_hidden1 = 64;
  h.ts_hidden2 = 32;
  return h;
}

// Hands the initial pose straight back.
class HoldRefiner final : public PoseRefiner {
 public:
  Pose9D refine(const SceneSample&, const Pose9D& init, int, Rng&) override { return init; }
};

SequenceConfig short_cfg(int length) {
  SequenceConfig c;
  c.length = length;
  c.scene.n_model_points = 1024;
  return c;
}

}  // namespace

TEST(GenSequence, StaticWhenMotionIsZero) {
  SequenceConfig c = short_cfg(6);
  c.motion = {0.0, 0.0};
  const Sequence s = gen_sequence(find_category("mug"), c, 3);
  for (const auto& f : s.frames) {
    EXPECT_EQ(f.gt.r.matrix(), s.frames[0].gt.r.matrix());
    EXPECT_EQ(f.gt.t, s.frames[0].gt.t);
    EXPECT_EQ(f.gt.s, s.frames[0].gt.s);
  }
}

TEST(GenSequence, StepsWithinBoundsAndRepeatable) {
  const SequenceConfig c = short_cfg(50);
  const Sequence s = gen_sequence(find_category("laptop"), c, 4);
  ASSERT_EQ(s.frames.size(), 50u);
  ASSERT_EQ(s.consecutive.size(), 50u);
  EXPECT_FALSE(s.consecutive[0]);
  for (std::size_t f = 1; f < s.frames.size(); ++f) {
    EXPECT_TRUE(s.consecutive[f]);
    EXPECT_LE(rotation_geodesic_deg(s.frames[f - 1].gt.r, s.frames[f].gt.r), 5.0 + 1e-9);
    EXPECT_LE((s.frames[f - 1].gt.t - s.frames[f].gt.t).norm(), 0.01 + 1e-12);
    EXPECT_EQ(s.frames[f].gt.s, s.frames[0].gt.s);
  }
  const Sequence again = gen_sequence(find_category("laptop"), c, 4);
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    EXPECT_EQ(again.frames[f].observed, s.frames[f].observed);
    EXPECT_EQ(again.frames[f].id, s.frames[f].id);
  }
}

TEST(GenSequence, InvalidConfigs) {
  SequenceConfig c = short_cfg(1);
  EXPECT_THROW(gen_sequence(find_category("can"), c, 0), Error);
  c = short_cfg(5);
  c.discontinuities = {5};
  EXPECT_THROW(gen_sequence(find_category("can"), c, 0), Error);
}

TEST(GenSequence, DatasetRoundTrip) {
  SequenceConfig c = short_cfg(8);
  c.discontinuities = {3};
  const auto& cat = find_category("bowl");
  const Sequence s = gen_sequence(cat, c, 5);
  const fs::path dir = fs::temp_directory_path() / "catre_unit_seq";
  fs::remove_all(dir);
  write_dataset(sequence_to_dataset(s, cat), dir);
  const Sequence back = sequence_from_dataset(read_dataset(dir));
  fs::remove_all(dir);
  EXPECT_EQ(back.consecutive, s.consecutive);
  EXPECT_EQ(back.category, "bowl");
  ASSERT_EQ(back.frames.size(), s.frames.size());
  EXPECT_EQ(back.frames[7].observed, s.frames[7].observed);
  EXPECT_EQ(back.motion.angular_deg_per_frame, 5.0);
  Dataset plain;
  plain.categories = {cat};
  EXPECT_THROW(sequence_from_dataset(plain), Error);
}

TEST(TrackSequence, OracleReproducesGroundTruth) {
  SequenceConfig c = short_cfg(20);
  c.discontinuities = {7, 13};
  const auto& cat = find_category("mug");
  const Sequence s = gen_sequence(cat, c, 6);
  OracleRefiner oracle;
  const TrackResult r = track_sequence(s, oracle, cat.symmetry, TrackConfig{});
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    EXPECT_EQ(r.frames[f].pose.r.matrix(), s.frames[f].gt.r.matrix());
    EXPECT_EQ(r.frames[f].pose.t, s.frames[f].gt.t);
    EXPECT_EQ(r.frames[f].pose.s, s.frames[f].gt.s);
    EXPECT_EQ(r.frames[f].t_err_cm, 0.0);
    EXPECT_LT(r.frames[f].r_err_deg, 1e-12);
  }
  EXPECT_EQ(r.reinit_frames, (std::vector<int>{7, 13}));
  const auto summary = tracking_report({r.records(s, cat.symmetry)});
  EXPECT_EQ(summary.t_err_cm, 0.0);
  EXPECT_EQ(summary.rate_5deg_5cm, 1.0);
}

TEST(TrackSequence, ReinitResetsAccumulatedError) {
  // A refiner that never moves lets the error build up with the motion;
  // the jump frame must start again from perturbed ground truth.
  SequenceConfig c = short_cfg(30);
  c.discontinuities = {20};
  const auto& cat = find_category("laptop");
  const Sequence s = gen_sequence(cat, c, 7);
  HoldRefiner hold;
  const TrackResult r = track_sequence(s, hold, cat.symmetry, TrackConfig{});
  EXPECT_EQ(r.reinit_frames, (std::vector<int>{20}));
  EXPECT_GT(r.frames[19].t_err_cm, 5.0);
  EXPECT_LT(r.frames[20].t_err_cm, 0.02 * 100 * 4);
  EXPECT_LT(r.frames[20].r_err_deg, 5.0 * 4);
  EXPECT_TRUE(r.frames[20].reinit);
  EXPECT_FALSE(r.frames[21].reinit);
}

TEST(TrackSequence, UntrainedNetworkDoesNotDriftOnStaticScene) {
  SequenceConfig c = short_cfg(50);
  c.motion = {0.0, 0.0};
  const auto& cat = find_category("bowl");
  const Sequence s = gen_sequence(cat, c, 8);
  const autonet::RefinerModel<float> model(small_hyper(), 1);
  NetworkRefiner<float> net(model, std::make_shared<const ShapePrior>(mean_shape(cat, 64)));
  const TrackResult r = track_sequence(s, net, cat.symmetry, TrackConfig{});
  // least-squares slope of t_err over frames
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = r.frames.size();
  for (const auto& f : r.frames) {
    sx += f.frame;
    sy += f.t_err_cm;
    sxx += f.frame * f.frame;
    sxy += f.frame * f.t_err_cm;
  }
  EXPECT_LE((n * sxy - sx * sy) / (n * sxx - sx * sx), 1e-3);
}

TEST(TrackSequence, FrameJson) {
  TrackFrame f;
  f.frame = 4;
  f.reinit = true;
  f.t_err_cm = 1.5;
  const auto j = track_frame_json(f);
  EXPECT_EQ(j.at("frame"), 4);
  EXPECT_EQ(j.at("reinit"), true);
  EXPECT_EQ(j.at("t_err_cm"), 1.5);
  EXPECT_TRUE(j.at("pose").contains("t"));
}

TEST(Refine, ZeroIterationsKeepInit) {
  Dataset d;
  d.categories = {find_category("can")};
  SceneConfig sc;
  sc.n_model_points = 1024;
  d.samples = generate_samples(d.categories, 4, sc, 2);
  const autonet::RefinerModel<float> model(small_hyper(), 1);
  const PredictionFile p = refine_dataset(model, d, PriorKind::kMeanShape, false, 0, 3);
  ASSERT_EQ(p.predictions.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(p.predictions[i].id, d.samples[i].id);
    EXPECT_EQ(p.predictions[i].pred.t, d.samples[i].init.t);
    EXPECT_EQ(p.predictions[i].pred.r.matrix(), d.samples[i].init.r.matrix());
    EXPECT_EQ(p.predictions[i].pred.s, d.samples[i].init.s);
  }
  ASSERT_EQ(p.per_iteration.size(), 1u);
}

TEST(Refine, DeterministicAcrossThreadCounts) {
  Dataset d;
  d.categories = {find_category("mug"), find_category("bowl")};
  SceneConfig sc;
  sc.n_model_points = 1024;
  d.samples = generate_samples(d.categories, 3, sc, 2);
  autonet::RefinerModel<float> model(small_hyper(), 1);
  const auto a = refine_dataset(model, d, PriorKind::kMeanShape, false, 3, 4, 1);
  const auto b = refine_dataset(model, d, PriorKind::kMeanShape, false, 3, 4, 3);
  ASSERT_EQ(a.per_iteration.size(), 4u);
  for (std::size_t i = 0; i < a.predictions.size(); ++i) {
    EXPECT_EQ(a.predictions[i].pred.t, b.predictions[i].pred.t);
    EXPECT_EQ(a.predictions[i].trace.size(), 4u);
  }
}

TEST(Bench, ReportShape) {
  const autonet::RefinerModel<float> model(small_hyper(), 1);
  BenchConfig c;
  c.n_o = c.n_p = 64;
  c.runs = 5;
  c.warmup = 1;
  const BenchReport r = bench_throughput(model, c);
  EXPECT_EQ(r.iters, 4);
  EXPECT_EQ(r.runs, 5);
  EXPECT_EQ(r.per_iteration_ms.size(), 4u);
  EXPECT_GT(r.hz, 0.0);
  EXPECT_GE(r.p95_ms, 0.0);
  EXPECT_NEAR(r.hz, 1000.0 / r.mean_ms, 1e-9);
  const auto j = bench_json(r);
  EXPECT_TRUE(j.contains("hz"));
  EXPECT_EQ(j.at("per_iteration_ms").size(), 4u);
  c.n_o = 128;
  EXPECT_THROW(bench_throughput(model, c), Error);
}
