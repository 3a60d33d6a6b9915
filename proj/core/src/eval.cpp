#include "catre/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"
#include "catre/random.hpp"
#include "json_codec.hpp"

namespace catre {

namespace {

constexpr int kSymSteps = 36;

using Corners = Eigen::Matrix<double, 8, 3>;

Corners box_corners(const Mat3& r, const Vec3& t, const Vec3& s) {
  Corners c;
  for (int i = 0; i < 8; ++i) {
    const Vec3 unit((i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5);
    c.row(i) = (r * unit.cwiseProduct(s) + t).transpose();
  }
  return c;
}

bool inside(const Vec3& local, const Vec3& half) {
  return std::abs(local(0)) <= half(0) && std::abs(local(1)) <= half(1) &&
         std::abs(local(2)) <= half(2);
}

void check_sizes(const Pose9D& p) {
  if (!(p.s.array() > 0.0).all()) {
    throw Error(ErrorKind::kInvalidSize, "box sizes must be positive");
  }
}

// Running mean; returns v exactly when every sample equals v.
class RunningMean {
 public:
  void add(double v) { mean_ += (v - mean_) / static_cast<double>(++n_); }
  double value() const { return mean_; }

 private:
  double mean_ = 0.0;
  std::int64_t n_ = 0;
};

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

double iou3d(const Pose9D& a, const Pose9D& b, const SymmetrySpec& sym, int n_samples,
             std::uint64_t seed) {
  check_sizes(a);
  check_sizes(b);
  const int steps = sym.symmetric() ? kSymSteps : 1;
  std::vector<Mat3> b_rots;
  for (int k = 0; k < steps; ++k) {
    const double angle = 2.0 * std::numbers::pi * k / steps;
    b_rots.push_back((b.r * Rotation::from_axis_angle(sym.axis, angle)).matrix());
  }

  // One sampling volume covering a and every turned copy of b.
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  auto grow = [&](const Corners& c) {
    lo = lo.cwiseMin(c.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(c.colwise().maxCoeff().transpose());
  };
  grow(box_corners(a.r.matrix(), a.t, a.s));
  for (const auto& r : b_rots) grow(box_corners(r, b.t, b.s));

  const int m = std::max(1, static_cast<int>(std::round(std::cbrt(n_samples))));
  const int nz = std::max(1, n_samples / (m * m));
  const Vec3 cell = (hi - lo).cwiseQuotient(Vec3(m, m, nz));
  const Vec3 half_a = 0.5 * a.s, half_b = 0.5 * b.s;
  const Mat3 ra_t = a.r.matrix().transpose();

  Rng rng(seed);
  // b-frame coordinates of every sample, and of those inside a.
  std::vector<Vec3> in_a, all_b;
  all_b.reserve(static_cast<std::size_t>(m) * m * nz);
  const Mat3 rb_t = b.r.matrix().transpose();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int k = 0; k < nz; ++k) {
        const Vec3 jitter(uniform(rng), uniform(rng), uniform(rng));
        const Vec3 x = lo + (Vec3(i, j, k) + jitter).cwiseProduct(cell);
        const Vec3 ua = ra_t * (x - a.t);
        const Vec3 ub = rb_t * (x - b.t);
        all_b.push_back(ub);
        if (inside(ua, half_a)) in_a.push_back(ub);
      }
    }
  }

  double best = 0.0;
  for (int step = 0; step < steps; ++step) {
    // Turning b by Q about its axis maps b-local coordinates u to Q^T u.
    const Mat3 q_t =
        Rotation::from_axis_angle(sym.axis, 2.0 * std::numbers::pi * step / steps).matrix().transpose();
    std::int64_t inter = 0, count_b = 0;
    for (const Vec3& u : in_a) inter += inside(q_t * u, half_b) ? 1 : 0;
    for (const Vec3& u : all_b) count_b += inside(q_t * u, half_b) ? 1 : 0;
    const double uni = static_cast<double>(in_a.size()) + static_cast<double>(count_b) -
                       static_cast<double>(inter);
    if (uni > 0.0) best = std::max(best, static_cast<double>(inter) / uni);
  }
  return best;
}

PoseError pose_error(const Pose9D& gt, const Pose9D& pred, const SymmetrySpec& sym) {
  const Rotation aligned = sym_align_rotation(gt.r, pred.r, sym);
  return {rotation_geodesic_deg(aligned, pred.r), 100.0 * (gt.t - pred.t).norm()};
}

bool pose_accuracy(const Pose9D& gt, const Pose9D& pred, double n_deg, double m_cm,
                   const SymmetrySpec& sym) {
  const PoseError e = pose_error(gt, pred, sym);
  return e.r_deg <= n_deg && e.t_cm <= m_cm;
}

Threshold Threshold::iou_at(double fraction) {
  Threshold t;
  t.kind = Kind::kIou;
  t.iou = fraction;
  t.name = "IoU" + std::to_string(static_cast<int>(std::round(fraction * 100)));
  return t;
}

Threshold Threshold::pose_at(double deg, double cm) {
  Threshold t;
  t.kind = Kind::kPose;
  t.deg = deg;
  t.cm = cm;
  auto num = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  t.name = num(deg) + "deg" + num(cm) + "cm";
  return t;
}

std::vector<Threshold> default_thresholds() {
  return {Threshold::iou_at(0.25),     Threshold::iou_at(0.50),     Threshold::iou_at(0.75),
          Threshold::pose_at(5, 2),    Threshold::pose_at(5, 5),    Threshold::pose_at(10, 2),
          Threshold::pose_at(10, 5)};
}

MetricReport map_sweep(std::span<const EvalRecord> records,
                       const std::vector<Threshold>& thresholds) {
  const bool need_iou = std::any_of(thresholds.begin(), thresholds.end(),
                                    [](const Threshold& t) { return t.kind == Threshold::Kind::kIou; });
  std::map<std::string, std::pair<std::size_t, std::vector<double>>> per_cat;
  for (const auto& rec : records) {
    auto& [count, passes] = per_cat[rec.category];
    passes.resize(thresholds.size(), 0.0);
    ++count;
    const double iou = need_iou ? iou3d(rec.gt, rec.pred, rec.sym) : 0.0;
    const PoseError e = pose_error(rec.gt, rec.pred, rec.sym);
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      const auto& th = thresholds[i];
      const bool pass = th.kind == Threshold::Kind::kIou ? iou >= th.iou
                                                         : (e.r_deg <= th.deg && e.t_cm <= th.cm);
      passes[i] += pass ? 1.0 : 0.0;
    }
  }

  MetricReport report;
  report.thresholds = thresholds;
  MapRow mean{"mean", 0, std::vector<double>(thresholds.size(), 0.0)};
  for (auto& [name, entry] : per_cat) {
    MapRow row{name, entry.first, entry.second};
    for (double& r : row.rates) r /= static_cast<double>(row.count);
    for (std::size_t i = 0; i < row.rates.size(); ++i) mean.rates[i] += row.rates[i];
    mean.count += row.count;
    report.rows.push_back(std::move(row));
  }
  if (!per_cat.empty()) {
    for (double& r : mean.rates) r /= static_cast<double>(per_cat.size());
  }
  report.rows.push_back(std::move(mean));
  return report;
}

double add_metric(const PointCloud& model_points, const Pose9D& gt, const Pose9D& pred) {
  if (model_points.rows() == 0) throw Error(ErrorKind::kInsufficientPoints, "ADD needs model points");
  // Differences taken before adding translations so a pure offset comes out exact.
  const Mat3 dr = gt.r.matrix() - pred.r.matrix();
  const Vec3 dt = gt.t - pred.t;
  RunningMean mean;
  for (Eigen::Index i = 0; i < model_points.rows(); ++i) {
    mean.add((dr * model_points.row(i).transpose() + dt).norm());
  }
  return mean.value();
}

double adds_metric(const PointCloud& model_points, const Pose9D& gt, const Pose9D& pred) {
  if (model_points.rows() == 0) throw Error(ErrorKind::kInsufficientPoints, "ADD-S needs model points");
  const PointCloud a = rigid_transform(gt.r, gt.t, model_points);
  const PointCloud b = rigid_transform(pred.r, pred.t, model_points);
  const Mat3 dr = gt.r.matrix() - pred.r.matrix();
  const Vec3 dt = gt.t - pred.t;
  RunningMean mean;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double nn = std::sqrt((b.rowwise() - a.row(i)).rowwise().squaredNorm().minCoeff());
    // The corresponding point is always a candidate, computed as in add_metric.
    mean.add(std::min(nn, (dr * model_points.row(i).transpose() + dt).norm()));
  }
  return mean.value();
}

double auc_from_errors(std::span<const double> errors_m, double max_cm) {
  if (errors_m.empty()) return 0.0;
  const double max_m = max_cm / 100.0;
  // The accuracy curve is a step function, so the integral is exact:
  // each record contributes the part of [0, max] above its error.
  double area = 0.0;
  for (double e : errors_m) area += std::clamp(max_m - e, 0.0, max_m);
  return area / (max_m * static_cast<double>(errors_m.size()));
}

double auc_add(std::span<const EvalRecord> records, double max_cm) {
  std::vector<double> errors;
  errors.reserve(records.size());
  for (const auto& rec : records) {
    errors.push_back(rec.sym.symmetric() ? adds_metric(rec.model_points, rec.gt, rec.pred)
                                         : add_metric(rec.model_points, rec.gt, rec.pred));
  }
  return auc_from_errors(errors, max_cm);
}

TrackingSummary tracking_report(const std::vector<std::vector<EvalRecord>>& sequences) {
  TrackingSummary out;
  for (const auto& seq : sequences) {
    for (const auto& rec : seq) {
      const PoseError e = pose_error(rec.gt, rec.pred, rec.sym);
      out.miou += iou3d(rec.gt, rec.pred, rec.sym);
      out.r_err_deg += e.r_deg;
      out.t_err_cm += e.t_cm;
      out.rate_5deg_5cm += (e.r_deg <= 5.0 && e.t_cm <= 5.0) ? 1.0 : 0.0;
      ++out.frames;
    }
  }
  if (out.frames > 0) {
    const double n = static_cast<double>(out.frames);
    out.miou /= n;
    out.r_err_deg /= n;
    out.t_err_cm /= n;
    out.rate_5deg_5cm /= n;
  }
  return out;
}

MetricReport evaluate_records(std::span<const EvalRecord> records,
                              const std::vector<Threshold>& thresholds) {
  MetricReport report = map_sweep(records, thresholds);
  for (const auto& rec : records) {
    const PoseError e = pose_error(rec.gt, rec.pred, rec.sym);
    report.mean_r_deg += e.r_deg;
    report.mean_t_cm += e.t_cm;
  }
  if (!records.empty()) {
    report.mean_r_deg /= static_cast<double>(records.size());
    report.mean_t_cm /= static_cast<double>(records.size());
  }
  const bool have_points = !records.empty() &&
                           std::all_of(records.begin(), records.end(),
                                       [](const EvalRecord& r) { return r.model_points.rows() > 0; });
  if (have_points) report.auc_add = auc_add(records);
  return report;
}

std::string MetricReport::to_csv() const {
  std::ostringstream os;
  os << "category,count";
  for (const auto& th : thresholds) os << ',' << th.name;
  os << '\n';
  for (const auto& row : rows) {
    os << row.category << ',' << row.count;
    for (double r : row.rates) os << ',' << format_rate(r);
    os << '\n';
  }
  return os.str();
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j;
  j["thresholds"] = nlohmann::json::array();
  for (const auto& th : thresholds) j["thresholds"].push_back(th.name);
  j["categories"] = nlohmann::json::object();
  for (const auto& row : rows) {
    nlohmann::json r = {{"count", row.count}};
    for (std::size_t i = 0; i < thresholds.size(); ++i) r[thresholds[i].name] = row.rates[i];
    j["categories"][row.category] = r;
  }
  j["mean_r_deg"] = mean_r_deg;
  j["mean_t_cm"] = mean_t_cm;
  j["auc_add"] = auc_add;
  if (tracking) {
    j["tracking"] = {{"frames", tracking->frames},
                     {"miou", tracking->miou},
                     {"r_err_deg", tracking->r_err_deg},
                     {"t_err_cm", tracking->t_err_cm},
                     {"rate_5deg_5cm", tracking->rate_5deg_5cm}};
  }
  return j;
}

void write_predictions(const PredictionFile& file, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "catre-predictions";
  j["version"] = kPredictionVersion;
  j["dataset"] = file.dataset.string();
  j["iters"] = file.iters;
  j["predictions"] = nlohmann::json::array();
  for (const auto& p : file.predictions) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& pose : p.trace) trace.push_back(detail::pose_to_json(pose));
    j["predictions"].push_back({{"id", p.id}, {"pred", detail::pose_to_json(p.pred)}, {"trace", trace}});
  }
  j["per_iteration"] = nlohmann::json::array();
  for (const auto& s : file.per_iteration) {
    j["per_iteration"].push_back({{"iter", s.iter},
                                  {"mean_r_deg", s.mean_r_deg},
                                  {"mean_t_cm", s.mean_t_cm},
                                  {"rate_5deg_2cm", s.rate_5deg_2cm},
                                  {"seconds", s.seconds}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  detail::write_text(path, j.dump(1) + "\n");
}

PredictionFile read_predictions(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  PredictionFile out;
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    if (j.at("format") != "catre-predictions") {
      throw Error(ErrorKind::kFormat, "not a predictions file");
    }
    const auto version = j.at("version").get<std::uint32_t>();
    if (version != kPredictionVersion) {
      throw Error(ErrorKind::kVersionMismatch,
                  "predictions version " + std::to_string(version));
    }
    out.dataset = j.at("dataset").get<std::string>();
    out.iters = j.at("iters").get<int>();
    for (const auto& p : j.at("predictions")) {
      Prediction pred;
      pred.id = p.at("id").get<std::string>();
      pred.pred = detail::pose_from_json(p.at("pred"));
      for (const auto& t : p.at("trace")) pred.trace.push_back(detail::pose_from_json(t));
      out.predictions.push_back(std::move(pred));
    }
    for (const auto& s : j.at("per_iteration")) {
      out.per_iteration.push_back({s.at("iter").get<int>(), s.at("mean_r_deg").get<double>(),
                                   s.at("mean_t_cm").get<double>(),
                                   s.at("rate_5deg_2cm").get<double>(), s.at("seconds").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, "predictions: " + std::string(e.what()));
  }
  return out;
}

std::vector<EvalRecord> join_predictions(const Dataset& dataset,
                                         std::span<const Prediction> predictions) {
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) {
      throw Error(ErrorKind::kIdMismatch, "duplicate prediction id '" + p.id + "'");
    }
  }
  if (by_id.size() != dataset.samples.size()) {
    throw Error(ErrorKind::kIdMismatch, std::to_string(predictions.size()) + " predictions for " +
                                            std::to_string(dataset.samples.size()) + " samples");
  }
  std::unordered_map<std::string, SymmetrySpec> sym_of;
  for (const auto& c : dataset.categories) sym_of[c.name] = c.symmetry;

  std::vector<EvalRecord> out;
  out.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      throw Error(ErrorKind::kIdMismatch, "no prediction for sample '" + s.id + "'");
    }
    auto sym = sym_of.find(s.category);
    if (sym == sym_of.end()) {
      throw Error(ErrorKind::kUnknownCategory, "sample category '" + s.category + "' not in dataset");
    }
    out.push_back({s.id, s.category, s.gt, it->second->pred, sym->second, s.model_points});
  }
  return out;
}

}  // namespace catre
