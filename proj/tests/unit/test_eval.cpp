#include <gtest/gtest.h>

#include <filesystem>

#include "catre/eval.hpp"
#include "catre/random.hpp"
#include "catre/synthdata.hpp"

using namespace catre;
namespace fs = std::filesystem;

namespace {

Pose9D box(Vec3 t, Vec3 s, Rotation r = {}) {
  Pose9D p;
  p.r = r;
  p.t = t;
  p.s = s;
  return p;
}

EvalRecord rec(const std::string& cat, const Pose9D& gt, const Pose9D& pred,
               SymmetrySpec sym = SymmetrySpec::none()) {
  static int next = 0;
  EvalRecord r;
  r.id = cat + "_" + std::to_string(next++);
  r.category = cat;
  r.gt = gt;
  r.pred = pred;
  r.sym = sym;
  return r;
}

Pose9D shifted(const Pose9D& p, double deg, double cm) {
  Pose9D q = p;
  q.r = p.r * Rotation::from_axis_angle(Vec3::UnitX(), deg * M_PI / 180);
  q.t += Vec3(cm / 100, 0, 0);
  return q;
}

}  // namespace

TEST(Iou3d, IdenticalAndDisjoint) {
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const Pose9D a = box(Vec3::Random(), Vec3(0.2, 0.3, 0.1), random_rotation(rng));
    EXPECT_NEAR(iou3d(a, a), 1.0, 0.005);
    EXPECT_GE(iou3d(a, a), 0.99);
  }
  EXPECT_EQ(iou3d(box(Vec3::Zero(), Vec3::Ones()), box(Vec3(5, 0, 0), Vec3::Ones())), 0.0);
}

TEST(Iou3d, AnalyticAxisAlignedOverlaps) {
  EXPECT_NEAR(iou3d(box(Vec3::Zero(), Vec3::Ones()), box(Vec3(0.5, 0, 0), Vec3::Ones())), 1.0 / 3.0, 0.01);
  // half-size cube nested in a unit cube
  EXPECT_NEAR(iou3d(box(Vec3::Zero(), Vec3::Ones()), box(Vec3::Zero(), Vec3::Constant(0.5))), 0.125, 0.01);
  // offsets on two axes: overlap 0.5 x 0.5 x 1
  EXPECT_NEAR(iou3d(box(Vec3::Zero(), Vec3::Ones()), box(Vec3(0.5, 0.5, 0), Vec3::Ones())), 0.25 / 1.75, 0.01);
  // elongated boxes: overlap 1 x 0.2 x 0.2 against 2 x 0.2 x 0.2 each
  EXPECT_NEAR(iou3d(box(Vec3::Zero(), Vec3(2, .2, .2)), box(Vec3(1, 0, 0), Vec3(2, .2, .2))), 1.0 / 3.0, 0.01);
}

TEST(Iou3d, SymmetricArguments) {
  Rng rng(2);
  for (int i = 0; i < 10; ++i) {
    const Pose9D a = box(Vec3::Random() * 0.05, Vec3(0.2, 0.3, 0.25), random_rotation(rng));
    const Pose9D b = box(Vec3::Random() * 0.05, Vec3(0.25, 0.2, 0.2), random_rotation(rng));
    EXPECT_NEAR(iou3d(a, b), iou3d(b, a), 0.01);
  }
}

TEST(Iou3d, SymmetryTurnsHelp) {
  const auto sym = SymmetrySpec::continuous(Vec3::UnitY());
  const Pose9D a = box(Vec3::Zero(), Vec3(0.4, 0.2, 0.1));
  const Pose9D b = box(Vec3::Zero(), Vec3(0.4, 0.2, 0.1), Rotation::from_axis_angle(Vec3::UnitY(), M_PI / 2));
  EXPECT_LT(iou3d(a, b), 0.5);
  EXPECT_GT(iou3d(a, b, sym), 0.99);
}

TEST(PoseAccuracy, Boundaries) {
  Rng rng(3);
  const Pose9D gt = box(Vec3(0, 0, 1), Vec3::Constant(0.1), random_rotation(rng));
  EXPECT_TRUE(pose_accuracy(gt, gt, 5, 2, SymmetrySpec::none()));
  EXPECT_FALSE(pose_accuracy(gt, shifted(gt, 5.0001, 0), 5, 2, SymmetrySpec::none()));
  EXPECT_TRUE(pose_accuracy(gt, shifted(gt, 4.9999, 0), 5, 2, SymmetrySpec::none()));
  EXPECT_TRUE(pose_accuracy(gt, shifted(gt, 0, 2.0), 5, 2, SymmetrySpec::none()));
  EXPECT_FALSE(pose_accuracy(gt, shifted(gt, 0, 2.0001), 5, 2, SymmetrySpec::none()));
  const auto& bottle = find_category("bottle");
  Pose9D spun = gt;
  spun.r = gt.r * Rotation::from_axis_angle(bottle.symmetry.axis, 1.3);
  EXPECT_TRUE(pose_accuracy(gt, spun, 5, 2, bottle.symmetry));
  EXPECT_FALSE(pose_accuracy(gt, spun, 5, 2, SymmetrySpec::none()));
}

TEST(MapSweep, AllCorrect) {
  Rng rng(4);
  std::vector<EvalRecord> recs;
  for (int i = 0; i < 5; ++i) {
    const Pose9D p = box(Vec3(0, 0, 1), Vec3(.1, .2, .1), random_rotation(rng));
    recs.push_back(rec(i % 2 ? "mug" : "can", p, p));
  }
  for (const auto& row : map_sweep(recs).rows) {
    for (double r : row.rates) EXPECT_DOUBLE_EQ(r, 1.0);
  }
}

TEST(MapSweep, HandBuiltFixture) {
  const Pose9D p = box(Vec3(0, 0, 1), Vec3(.1, .1, .1));
  // (deg, cm): (0,0) passes all; (3,3) passes 5°5cm & 10°5cm;
  // (8,1) passes 10°2cm & 10°5cm; (20,20) passes none.
  std::vector<EvalRecord> recs = {rec("laptop", p, shifted(p, 0, 0)), rec("laptop", p, shifted(p, 3, 3)),
                                  rec("laptop", p, shifted(p, 8, 1)), rec("laptop", p, shifted(p, 20, 20))};
  const std::vector<Threshold> th = {Threshold::pose_at(5, 2), Threshold::pose_at(5, 5), Threshold::pose_at(10, 2),
                                     Threshold::pose_at(10, 5)};
  const auto report = map_sweep(recs, th);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].category, "laptop");
  EXPECT_EQ(report.rows[0].rates, (std::vector<double>{0.25, 0.5, 0.5, 0.75}));
  EXPECT_EQ(report.mean_row().rates, report.rows[0].rates);
  EXPECT_EQ(report.mean_row().category, "mean");
}

TEST(MapSweep, MeanOverCategoriesAndMonotone) {
  const Pose9D p = box(Vec3(0, 0, 1), Vec3(.1, .1, .1));
  std::vector<EvalRecord> recs = {rec("a", p, p), rec("b", p, shifted(p, 30, 0)), rec("b", p, p), rec("b", p, p)};
  const auto report = map_sweep(recs, {Threshold::pose_at(5, 2), Threshold::pose_at(10, 5)});
  ASSERT_EQ(report.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(report.mean_row().rates[0], (1.0 + 2.0 / 3.0) / 2);
  Rng rng(5);
  std::vector<EvalRecord> noisy;
  for (int i = 0; i < 200; ++i) noisy.push_back(rec("x", p, shifted(p, uniform(rng, 0, 15), uniform(rng, 0, 8))));
  const auto r2 = map_sweep(noisy, {Threshold::pose_at(5, 2), Threshold::pose_at(10, 5)});
  EXPECT_GE(r2.mean_row().rates[1], r2.mean_row().rates[0]);
}

TEST(Add, IdentityAndPureTranslation) {
  Rng rng(6);
  const PointCloud pts = PointCloud::Random(300, 3) * 0.1;
  const Pose9D gt = box(Vec3(0, 0, 1), Vec3::Ones(), random_rotation(rng));
  EXPECT_EQ(add_metric(pts, gt, gt), 0.0);
  EXPECT_EQ(adds_metric(pts, gt, gt), 0.0);
  Pose9D moved = gt;
  const Vec3 delta(0.03, -0.04, 0.0);
  moved.t += delta;
  EXPECT_EQ(add_metric(pts, gt, moved), delta.norm());
}

TEST(Add, SymmetricNeverExceedsPlain) {
  Rng rng(7);
  const auto m = gen_instance(find_category("mug"), 3, 256);
  for (int i = 0; i < 1000; ++i) {
    const Pose9D a = box(Vec3::Random() * 0.1, Vec3::Ones(), random_rotation(rng));
    const Pose9D b = box(Vec3::Random() * 0.1, Vec3::Ones(), random_rotation(rng));
    ASSERT_LE(adds_metric(m.points, a, b), add_metric(m.points, a, b) + 1e-12);
  }
}

TEST(Auc, StepFunctionFixtures) {
  const std::vector<double> zero = {0.0, 0.0}, far = {0.11, 0.5}, five = {0.05};
  EXPECT_NEAR(auc_from_errors(zero), 1.0, 1e-12);
  EXPECT_NEAR(auc_from_errors(far), 0.0, 1e-12);
  EXPECT_NEAR(auc_from_errors(five), 0.5, 1e-6);
  const std::vector<double> two = {0.02, 0.06};
  EXPECT_NEAR(auc_from_errors(two), (0.8 + 0.4) / 2, 1e-9);
}

TEST(Auc, MonotoneInImprovements) {
  Rng rng(8);
  std::vector<double> e(50);
  for (auto& x : e) x = uniform(rng, 0, 0.12);
  double prev = auc_from_errors(e);
  for (int i = 0; i < 50; ++i) {
    e[i] *= 0.5;
    const double now = auc_from_errors(e);
    EXPECT_GE(now, prev);
    prev = now;
  }
}

TEST(Tracking, PerfectAndHandComputed) {
  Rng rng(9);
  const Pose9D p = box(Vec3(0, 0, 1), Vec3(.1, .2, .15), random_rotation(rng));
  const auto perfect = tracking_report({{rec("mug", p, p), rec("mug", p, p)}});
  EXPECT_NEAR(perfect.miou, 1.0, 0.005);
  EXPECT_LT(perfect.r_err_deg, 1e-12);
  EXPECT_EQ(perfect.t_err_cm, 0.0);
  EXPECT_EQ(perfect.rate_5deg_5cm, 1.0);

  // two frames: (0°, 0 cm) and (10°, 4 cm)
  const auto two = tracking_report({{rec("mug", p, p), rec("mug", p, shifted(p, 10, 4))}});
  EXPECT_EQ(two.frames, 2u);
  EXPECT_NEAR(two.r_err_deg, 5.0, 1e-9);
  EXPECT_NEAR(two.t_err_cm, 2.0, 1e-9);
  EXPECT_DOUBLE_EQ(two.rate_5deg_5cm, 0.5);
}

TEST(Report, CsvAndJsonShapes) {
  const Pose9D p = box(Vec3(0, 0, 1), Vec3(.1, .1, .1));
  auto r = rec("can", p, shifted(p, 1, 1));
  r.model_points = PointCloud::Random(50, 3) * 0.05;
  std::vector<EvalRecord> recs = {r};
  const MetricReport rep = evaluate_records(recs);
  const std::string csv = rep.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "category,count,IoU25,IoU50,IoU75,5deg2cm,5deg5cm,10deg2cm,10deg5cm");
  const auto j = rep.to_json();
  EXPECT_TRUE(j.contains("categories"));
  EXPECT_NEAR(j.at("mean_t_cm").get<double>(), 1.0, 1e-9);
  EXPECT_GT(rep.auc_add, 0.8);
}

TEST(Predictions, FileRoundTripAndJoin) {
  Dataset d;
  d.categories = {find_category("can")};
  d.samples = generate_samples(d.categories, 3, SceneConfig{}, 4);
  PredictionFile f;
  f.dataset = "/nowhere";
  f.iters = 0;
  for (const auto& s : d.samples) f.predictions.push_back({s.id, s.gt, {s.init}});
  f.per_iteration.push_back({0, 1.5, 2.0, 0.5, 0.0});
  const fs::path path = fs::temp_directory_path() / "catre_unit_preds.json";
  write_predictions(f, path);
  const PredictionFile back = read_predictions(path);
  fs::remove(path);
  ASSERT_EQ(back.predictions.size(), 3u);
  EXPECT_EQ(back.predictions[1].pred.t, f.predictions[1].pred.t);
  EXPECT_EQ(back.predictions[1].pred.r.matrix(), f.predictions[1].pred.r.matrix());
  EXPECT_EQ(back.per_iteration.at(0).mean_t_cm, 2.0);
  EXPECT_EQ(back.dataset, f.dataset);

  // perfect predictions saturate every metric
  const auto recs = join_predictions(d, back.predictions);
  const auto rep = evaluate_records(recs);
  for (double r : rep.mean_row().rates) EXPECT_DOUBLE_EQ(r, 1.0);
  EXPECT_NEAR(rep.auc_add, 1.0, 1e-12);

  auto missing = back.predictions;
  missing.pop_back();
  auto dup = back.predictions;
  dup[2].id = dup[0].id;
  auto stranger = back.predictions;
  stranger[0].id = "nope";
  for (const auto* bad : {&missing, &dup, &stranger}) {
    try {
      join_predictions(d, *bad);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kIdMismatch);
    }
  }
}
