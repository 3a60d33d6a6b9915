#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "catre/geometry.hpp"
#include "catre/synthdata.hpp"

namespace catre {

struct EvalRecord {
  std::string id;
  std::string category;
  Pose9D gt;
  Pose9D pred;
  SymmetrySpec sym;
  PointCloud model_points;  // object frame, metric; may be empty if ADD is not needed
};

/// Oriented-box IoU: each box is R (s * unit cube) + t. Monte-Carlo over a
/// stratified grid of `n_samples` points spanning the union's bounding
/// volume. For symmetric objects the predicted box is additionally turned
/// about the symmetry axis in 36 steps and the best overlap is kept.
double iou3d(const Pose9D& a, const Pose9D& b, const SymmetrySpec& sym = SymmetrySpec::none(),
             int n_samples = 100000, std::uint64_t seed = 0);

struct PoseError {
  double r_deg = 0.0;  // sym-aligned geodesic
  double t_cm = 0.0;
};
PoseError pose_error(const Pose9D& gt, const Pose9D& pred, const SymmetrySpec& sym);

/// Inclusive thresholds.
bool pose_accuracy(const Pose9D& gt, const Pose9D& pred, double n_deg, double m_cm,
                   const SymmetrySpec& sym);

struct Threshold {
  enum class Kind { kIou, kPose };
  std::string name;
  Kind kind = Kind::kPose;
  double iou = 0.0;
  double deg = 0.0;
  double cm = 0.0;

  static Threshold iou_at(double fraction);
  static Threshold pose_at(double deg, double cm);
};

/// IoU25, IoU50, IoU75, 5°2cm, 5°5cm, 10°2cm, 10°5cm.
std::vector<Threshold> default_thresholds();

struct MapRow {
  std::string category;  // "mean" for the across-category average
  std::size_t count = 0;
  std::vector<double> rates;  // aligned with MetricReport::thresholds
};

struct TrackingSummary {
  std::size_t frames = 0;
  double miou = 0.0;
  double r_err_deg = 0.0;
  double t_err_cm = 0.0;
  double rate_5deg_5cm = 0.0;
};

struct MetricReport {
  std::vector<Threshold> thresholds;
  std::vector<MapRow> rows;  // per category (sorted by name), then "mean"
  double mean_r_deg = 0.0;
  double mean_t_cm = 0.0;
  double auc_add = 0.0;   // ADD for asymmetric, ADD-S for symmetric records
  std::optional<TrackingSummary> tracking;

  const MapRow& mean_row() const { return rows.back(); }
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

/// Pass rates per category and their mean over non-empty categories.
MetricReport map_sweep(std::span<const EvalRecord> records,
                       const std::vector<Threshold>& thresholds = default_thresholds());

/// Mean distance between corresponding model points under the two poses.
/// Model points are metric, so only R and t are applied.
double add_metric(const PointCloud& model_points, const Pose9D& gt, const Pose9D& pred);
/// Mean nearest-neighbor distance from gt-placed to pred-placed points.
double adds_metric(const PointCloud& model_points, const Pose9D& gt, const Pose9D& pred);

/// Normalized area under the accuracy-vs-threshold curve on [0, max_cm].
double auc_from_errors(std::span<const double> errors_m, double max_cm = 10.0);
/// ADD-S for symmetric records, ADD otherwise. Records need model points.
double auc_add(std::span<const EvalRecord> records, double max_cm = 10.0);

TrackingSummary tracking_report(const std::vector<std::vector<EvalRecord>>& sequences);

/// Full report: map sweep, mean errors, and AUC when model points are present.
MetricReport evaluate_records(std::span<const EvalRecord> records,
                              const std::vector<Threshold>& thresholds = default_thresholds());

// ---- prediction files ---------------------------------------------------

inline constexpr std::uint32_t kPredictionVersion = 1;

struct Prediction {
  std::string id;
  Pose9D pred;
  std::vector<Pose9D> trace;  // init, then the pose after each iteration
};

struct IterationStat {
  int iter = 0;
  double mean_r_deg = 0.0;
  double mean_t_cm = 0.0;
  double rate_5deg_2cm = 0.0;
  double seconds = 0.0;  // cumulative mean wall time per sample
};

/// JSON document pointing at the dataset it was computed on.
struct PredictionFile {
  std::filesystem::path dataset;
  int iters = 0;
  std::vector<Prediction> predictions;
  std::vector<IterationStat> per_iteration;
};

void write_predictions(const PredictionFile& file, const std::filesystem::path& path);
PredictionFile read_predictions(const std::filesystem::path& path);

/// Joins predictions with dataset samples by id. Throws kIdMismatch when
/// any id is missing on either side or duplicated.
std::vector<EvalRecord> join_predictions(const Dataset& dataset,
                                         std::span<const Prediction> predictions);

}  // namespace catre
