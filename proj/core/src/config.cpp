#include "catre/config.hpp"

#include <set>

#include "binary_io.hpp"

namespace catre {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::kInvalidConfig, what); }

// Reads known keys from one JSON object and complains about the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(where() + " must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail("unknown key '" + prefix() + key + "'");
    }
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail("bad value for '" + prefix() + key + "'");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), prefix() + key);
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }
  std::string prefix() const { return path_.empty() ? "" : path_ + "."; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_perturb(Section s, PerturbSpec& p) {
  s.get("rot_std_deg", p.rot_std_deg);
  s.get("trans_std_m", p.trans_std_m);
  s.get("size_rel_std", p.size_rel_std);
}

json perturb_json(const PerturbSpec& p) {
  return {{"rot_std_deg", p.rot_std_deg}, {"trans_std_m", p.trans_std_m}, {"size_rel_std", p.size_rel_std}};
}

void read_augment(Section s, AugmentSpec& a) {
  s.get("p_drop", a.p_drop);
  s.get("drop_frac", a.drop_frac);
  s.get("p_noise", a.p_noise);
  s.get("noise_sigma_m", a.noise_sigma_m);
  s.get("p_zero", a.p_zero);
  s.get("zero_frac", a.zero_frac);
  s.get("random_fraction", a.random_fraction);
}

json augment_json(const AugmentSpec& a) {
  return {{"p_drop", a.p_drop},   {"drop_frac", a.drop_frac},         {"p_noise", a.p_noise},
          {"noise_sigma_m", a.noise_sigma_m}, {"p_zero", a.p_zero},   {"zero_frac", a.zero_frac},
          {"random_fraction", a.random_fraction}};
}

}  // namespace

void RunConfig::finalize() {
  if (threads < 1) fail("threads must be >= 1");
  if (deterministic) threads = 1;
  if (data.categories.empty()) fail("data.categories must not be empty");
  for (const auto& name : data.categories) {
    try {
      find_category(name);
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  if (data.samples_per_category < 1) fail("data.samples_per_category must be >= 1");
  if (data.scene.n_model_points < 1 || data.scene.n_stored_model_points < 1 ||
      data.scene.clutter_points < 0 || data.scene.carve_frac < 0 || data.scene.carve_frac >= 1) {
    fail("data scene settings out of range");
  }
  if (refine_iters < 0) fail("refine.iters must be >= 0");
  if (track.sequences < 1) fail("track.sequences must be >= 1");
  if (track.track.iters < 1) fail("track.iters must be >= 1");

  model.predict_size = train.mode == TrainMode::kCategory;
  train.seed = seed;
  track.track.seed = seed;
  bench.seed = seed;
  try {
    model.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  train.validate();
  if (train.prior == PriorKind::kBBoxCorners && model.n_p != 8) fail("bbox-corners prior needs model.n_p = 8");
  if (train.prior == PriorKind::kAxes && model.n_p != 4) fail("axes prior needs model.n_p = 4");
}

std::vector<CategorySpec> RunConfig::category_specs() const {
  std::vector<CategorySpec> out;
  for (const auto& name : data.categories) out.push_back(find_category(name));
  return out;
}

RunConfig default_run_config() { return RunConfig{}; }

RunConfig run_config_from_json(const json& j, RunConfig cfg) {
  Section root(j, "");
  root.get("seed", cfg.seed);
  root.get("threads", cfg.threads);
  root.get("deterministic", cfg.deterministic);

  if (root.has("data")) {
    Section s = root.sub("data");
    s.get("categories", cfg.data.categories);
    s.get("samples_per_category", cfg.data.samples_per_category);
    s.get("n_model_points", cfg.data.scene.n_model_points);
    s.get("n_stored_model_points", cfg.data.scene.n_stored_model_points);
    s.get("clutter_points", cfg.data.scene.clutter_points);
    s.get("carve_frac", cfg.data.scene.carve_frac);
    if (s.has("perturb")) read_perturb(s.sub("perturb"), cfg.data.scene.perturb);
  }
  if (root.has("model")) {
    Section s = root.sub("model");
    auto& m = cfg.model;
    s.get("n_o", m.n_o);
    s.get("n_p", m.n_p);
    s.get("point_dim", m.point_dim);
    s.get("global_dim", m.global_dim);
    s.get("enc_hidden", m.enc_hidden);
    s.get("enc_wide", m.enc_wide);
    s.get("rot_hidden", m.rot_hidden);
    s.get("gn_groups", m.gn_groups);
    s.get("ts_hidden1", m.ts_hidden1);
    s.get("ts_hidden2", m.ts_hidden2);
    s.get("t_net", m.t_net);
  }
  if (root.has("train")) {
    Section s = root.sub("train");
    auto& t = cfg.train;
    s.get("epochs", t.epochs);
    s.get("batch_size", t.batch_size);
    s.get("base_lr", t.base_lr);
    s.get("anneal_start_frac", t.anneal_start_frac);
    s.get("iters_per_sample", t.iters_per_sample);
    s.get("min_size", t.min_size);
    s.get("fixed_noise", t.fixed_noise);
    std::string mode(to_string(t.mode)), prior(to_string(t.prior));
    s.get("mode", mode);
    s.get("prior", prior);
    try {
      t.mode = train_mode_from_string(mode);
      t.prior = prior_kind_from_string(prior);
    } catch (const Error& e) {
      fail(e.what());
    }
    if (s.has("perturb")) read_perturb(s.sub("perturb"), t.perturb);
    if (s.has("augment")) read_augment(s.sub("augment"), t.augment);
    if (s.has("adam")) {
      Section a = s.sub("adam");
      a.get("beta1", t.adam.beta1);
      a.get("beta2", t.adam.beta2);
      a.get("eps", t.adam.eps);
      a.get("weight_decay", t.adam.weight_decay);
      a.get("lookahead", t.adam.lookahead);
      a.get("lookahead_k", t.adam.lookahead_k);
      a.get("lookahead_alpha", t.adam.lookahead_alpha);
    }
  }
  if (root.has("refine")) {
    Section s = root.sub("refine");
    s.get("iters", cfg.refine_iters);
  }
  if (root.has("track")) {
    Section s = root.sub("track");
    s.get("sequences", cfg.track.sequences);
    s.get("length", cfg.track.sequence.length);
    s.get("angular_deg_per_frame", cfg.track.sequence.motion.angular_deg_per_frame);
    s.get("linear_m_per_frame", cfg.track.sequence.motion.linear_m_per_frame);
    s.get("discontinuities", cfg.track.sequence.discontinuities);
    s.get("iters", cfg.track.track.iters);
    if (s.has("perturb")) read_perturb(s.sub("perturb"), cfg.track.track.perturb);
  }
  if (root.has("bench")) {
    Section s = root.sub("bench");
    s.get("iters", cfg.bench.iters);
    s.get("runs", cfg.bench.runs);
    s.get("warmup", cfg.bench.warmup);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

json to_json(const RunConfig& c) {
  const auto& m = c.model;
  const auto& t = c.train;
  return {
      {"seed", c.seed},
      {"threads", c.threads},
      {"deterministic", c.deterministic},
      {"data",
       {{"categories", c.data.categories},
        {"samples_per_category", c.data.samples_per_category},
        {"n_model_points", c.data.scene.n_model_points},
        {"n_stored_model_points", c.data.scene.n_stored_model_points},
        {"clutter_points", c.data.scene.clutter_points},
        {"carve_frac", c.data.scene.carve_frac},
        {"perturb", perturb_json(c.data.scene.perturb)}}},
      {"model",
       {{"n_o", m.n_o},
        {"n_p", m.n_p},
        {"point_dim", m.point_dim},
        {"global_dim", m.global_dim},
        {"enc_hidden", m.enc_hidden},
        {"enc_wide", m.enc_wide},
        {"rot_hidden", m.rot_hidden},
        {"gn_groups", m.gn_groups},
        {"ts_hidden1", m.ts_hidden1},
        {"ts_hidden2", m.ts_hidden2},
        {"t_net", m.t_net}}},
      {"train",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"base_lr", t.base_lr},
        {"anneal_start_frac", t.anneal_start_frac},
        {"iters_per_sample", t.iters_per_sample},
        {"min_size", t.min_size},
        {"fixed_noise", t.fixed_noise},
        {"mode", std::string(to_string(t.mode))},
        {"prior", std::string(to_string(t.prior))},
        {"perturb", perturb_json(t.perturb)},
        {"augment", augment_json(t.augment)},
        {"adam",
         {{"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},
          {"eps", t.adam.eps},
          {"weight_decay", t.adam.weight_decay},
          {"lookahead", t.adam.lookahead},
          {"lookahead_k", t.adam.lookahead_k},
          {"lookahead_alpha", t.adam.lookahead_alpha}}}}},
      {"refine", {{"iters", c.refine_iters}}},
      {"track",
       {{"sequences", c.track.sequences},
        {"length", c.track.sequence.length},
        {"angular_deg_per_frame", c.track.sequence.motion.angular_deg_per_frame},
        {"linear_m_per_frame", c.track.sequence.motion.linear_m_per_frame},
        {"discontinuities", c.track.sequence.discontinuities},
        {"iters", c.track.track.iters},
        {"perturb", perturb_json(c.track.track.perturb)}}},
      {"bench", {{"iters", c.bench.iters}, {"runs", c.bench.runs}, {"warmup", c.bench.warmup}}},
  };
}

}  // namespace catre
