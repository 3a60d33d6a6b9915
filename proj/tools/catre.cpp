// catre: data generation, training, refinement, tracking, evaluation and
// throughput measurement from one binary.

#include <malloc.h>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "catre/checkpoint.hpp"
#include "catre/config.hpp"
#include "catre/eval.hpp"
#include "catre/track.hpp"
#include "catre/train.hpp"

namespace fs = std::filesystem;
using namespace catre;

namespace {

enum Exit { kOk = 0, kUsage = 1, kRuntime = 2 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool deterministic = false;
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg = g.config.empty() ? default_run_config() : load_run_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) cfg.threads = *g.threads;
  if (g.deterministic) cfg.deterministic = true;
  return cfg;
}

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) {
    throw Error(ErrorKind::kInvalidConfig, std::string(what) + " '" + p.string() + "' is not a directory");
  }
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) {
    throw Error(ErrorKind::kInvalidConfig, std::string(what) + " '" + p.string() + "' does not exist");
  }
}

nlohmann::json checkpoint_meta(const RunConfig& cfg) {
  return {{"prior", std::string(to_string(cfg.train.prior))},
          {"mode", std::string(to_string(cfg.train.mode))},
          {"categories", cfg.data.categories},
          {"config", to_json(cfg)}};
}

PriorKind meta_prior(const Checkpoint<float>& ckpt) {
  return prior_kind_from_string(ckpt.meta.value("prior", std::string("mean-shape")));
}

bool meta_instance(const Checkpoint<float>& ckpt) {
  return ckpt.meta.value("mode", std::string("category")) == "instance";
}

// ---- subcommands ----------------------------------------------------------

int cmd_gen_data(const Globals& g, const fs::path& out, std::optional<int> samples, int sequences) {
  RunConfig cfg = resolve(g);
  if (samples) cfg.data.samples_per_category = *samples;
  cfg.finalize();
  const auto cats = cfg.category_specs();
  if (sequences > 0) {
    // One directory per sequence, categories taken in turn.
    for (int i = 0; i < sequences; ++i) {
      const CategorySpec& cat = cats[i % cats.size()];
      SequenceConfig sc = cfg.track.sequence;
      sc.scene = cfg.data.scene;
      const Sequence seq = gen_sequence(cat, sc, derive_seed(cfg.seed, static_cast<std::uint64_t>(i)));
      char name[32];
      std::snprintf(name, sizeof(name), "seq_%03d", i);
      write_dataset(sequence_to_dataset(seq, cat), out / name);
      std::cout << name << ' ' << cat.name << ' ' << seq.frames.size() << " frames\n";
    }
    return kOk;
  }
  Dataset d;
  d.categories = cats;
  d.samples = generate_samples(cats, cfg.data.samples_per_category, cfg.data.scene, cfg.seed, cfg.threads);
  write_dataset(d, out);
  std::map<std::string, int> counts;
  for (const auto& s : d.samples) ++counts[s.category];
  for (const auto& [name, n] : counts) std::cout << name << ' ' << n << '\n';
  return kOk;
}

int cmd_train(const Globals& g, const fs::path& data, const fs::path& out, std::optional<int> epochs,
              const std::string& resume, std::string log_path) {
  RunConfig cfg = resolve(g);
  if (epochs) cfg.train.epochs = *epochs;
  require_dir(data, "data");
  if (!resume.empty()) require_file(resume, "checkpoint");
  const Dataset ds = read_dataset(data);
  cfg.finalize();

  TrainState<float> state;
  if (!resume.empty()) {
    state = to_train_state(load_checkpoint<float>(resume));
    if (!(state.model.hyper() == cfg.model)) {
      throw Error(ErrorKind::kInvalidConfig, "checkpoint architecture differs from the config");
    }
  } else {
    state.model = autonet::RefinerModel<float>(cfg.model, derive_seed(cfg.seed, 0x6d6f64656cULL));
  }
  const auto items = make_train_items(ds.samples, ds.categories, cfg.train.prior, cfg.train.mode,
                                      cfg.model.n_p);
  if (log_path.empty()) log_path = out.string() + ".log.jsonl";
  std::ofstream log(log_path, resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw Error(ErrorKind::kIo, "cannot write " + log_path);

  const auto meta = checkpoint_meta(cfg);
  train(state, items, cfg.train, &log, [&](const EpochMetrics& m) {
    save_checkpoint(to_checkpoint(state, meta), out);
    std::fprintf(stderr, "epoch %lld/%d loss %.5f (iter1 %.5f, iter%d %.5f) lr %.2e %.1fs\n",
                 static_cast<long long>(m.epoch + 1), cfg.train.epochs, m.mean_total,
                 m.first_iter.total, cfg.train.iters_per_sample, m.last_iter.total, m.lr, m.seconds);
  });
  // Zero remaining epochs still leaves a loadable checkpoint behind.
  if (!fs::exists(out)) save_checkpoint(to_checkpoint(state, meta), out);
  std::cout << "wrote " << out.string() << '\n';
  return kOk;
}

int cmd_refine(const Globals& g, const fs::path& ckpt_path, const fs::path& data, int iters,
               const fs::path& out) {
  RunConfig cfg = resolve(g);
  require_file(ckpt_path, "checkpoint");
  require_dir(data, "data");
  if (iters < 0) throw Error(ErrorKind::kInvalidConfig, "--iters must be >= 0");
  cfg.finalize();
  const auto ckpt = load_checkpoint<float>(ckpt_path);
  const Dataset ds = read_dataset(data);
  PredictionFile preds = refine_dataset(ckpt.model, ds, meta_prior(ckpt), meta_instance(ckpt), iters,
                                        cfg.seed, cfg.threads);
  preds.dataset = fs::absolute(data);
  write_predictions(preds, out);
  std::cout << "iter,mean_r_deg,mean_t_cm,rate_5deg_2cm,seconds\n";
  for (const auto& s : preds.per_iteration) {
    std::printf("%d,%.4f,%.4f,%.4f,%.6f\n", s.iter, s.mean_r_deg, s.mean_t_cm, s.rate_5deg_2cm, s.seconds);
  }
  return kOk;
}

int cmd_track(const Globals& g, const fs::path& ckpt_path, const fs::path& seq_dir, const fs::path& out,
              std::optional<int> iters) {
  RunConfig cfg = resolve(g);
  require_file(ckpt_path, "checkpoint");
  require_dir(seq_dir, "sequence");
  if (iters) cfg.track.track.iters = *iters;
  cfg.finalize();
  const auto ckpt = load_checkpoint<float>(ckpt_path);

  std::vector<fs::path> dirs;
  if (fs::exists(seq_dir / "manifest.json")) {
    dirs.push_back(seq_dir);
  } else {
    for (const auto& e : fs::directory_iterator(seq_dir)) {
      if (e.is_directory() && fs::exists(e.path() / "manifest.json")) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
  }
  if (dirs.empty()) throw Error(ErrorKind::kInvalidConfig, "no sequences under " + seq_dir.string());

  std::ofstream log(out, std::ios::trunc);
  if (!log) throw Error(ErrorKind::kIo, "cannot write " + out.string());
  std::vector<std::vector<EvalRecord>> all;
  for (const auto& dir : dirs) {
    const Dataset ds = read_dataset(dir);
    const Sequence seq = sequence_from_dataset(ds);
    const CategorySpec& cat = ds.categories.front();
    const auto items = make_train_items(std::span(ds.samples).first(1), ds.categories, meta_prior(ckpt),
                                        meta_instance(ckpt) ? TrainMode::kInstance : TrainMode::kCategory,
                                        ckpt.model.hyper().n_p);
    NetworkRefiner<float> refiner(ckpt.model, items.front().prior);
    const TrackResult r = track_sequence(seq, refiner, cat.symmetry, cfg.track.track);
    for (const auto& f : r.frames) {
      auto line = track_frame_json(f);
      line["sequence"] = dir.filename().string();
      log << line.dump() << '\n';
    }
    all.push_back(r.records(seq, cat.symmetry));
  }
  const TrackingSummary s = tracking_report(all);
  std::printf("frames %zu mIoU %.4f R_err %.3f deg t_err %.3f cm 5deg5cm %.4f\n", s.frames, s.miou,
              s.r_err_deg, s.t_err_cm, s.rate_5deg_5cm);
  return kOk;
}

int cmd_eval(const Globals& g, const fs::path& preds_path, const fs::path& out, const std::string& data) {
  RunConfig cfg = resolve(g);
  cfg.finalize();
  require_file(preds_path, "predictions");
  const PredictionFile preds = read_predictions(preds_path);
  const fs::path data_dir = data.empty() ? preds.dataset : fs::path(data);
  require_dir(data_dir, "data");
  const Dataset ds = read_dataset(data_dir);
  const auto records = join_predictions(ds, preds.predictions);
  const MetricReport report = evaluate_records(records);

  nlohmann::json j = report.to_json();
  j["per_iteration"] = nlohmann::json::array();
  for (const auto& s : preds.per_iteration) {
    j["per_iteration"].push_back({{"iter", s.iter},
                                  {"mean_r_deg", s.mean_r_deg},
                                  {"mean_t_cm", s.mean_t_cm},
                                  {"rate_5deg_2cm", s.rate_5deg_2cm}});
  }
  fs::path json_path = out, csv_path = out;
  if (out.extension() == ".csv") {
    json_path.replace_extension(".json");
  } else {
    csv_path.replace_extension(".csv");
  }
  if (json_path.has_parent_path()) fs::create_directories(json_path.parent_path());
  std::ofstream(json_path) << j.dump(2) << '\n';
  std::ofstream(csv_path) << report.to_csv();
  std::cout << report.to_csv();
  std::printf("mean_r_deg %.4f mean_t_cm %.4f auc_add %.4f\n", report.mean_r_deg, report.mean_t_cm,
              report.auc_add);
  return kOk;
}

int cmd_bench(const Globals& g, const std::string& ckpt_path, std::optional<int> iters,
              std::optional<int> runs, const std::string& out) {
  RunConfig cfg = resolve(g);
  if (iters) cfg.bench.iters = *iters;
  if (runs) cfg.bench.runs = *runs;
  cfg.finalize();
  autonet::RefinerModel<float> model;
  if (!ckpt_path.empty()) {
    require_file(ckpt_path, "checkpoint");
    model = load_checkpoint<float>(ckpt_path).model;
  } else {
    autonet::ModelHyper h = cfg.model;
    h.n_o = cfg.bench.n_o;
    h.n_p = cfg.bench.n_p;
    model = autonet::RefinerModel<float>(h, cfg.seed);
  }
  cfg.bench.n_o = model.hyper().n_o;
  cfg.bench.n_p = model.hyper().n_p;
  const BenchReport r = bench_throughput(model, cfg.bench);
  std::printf("K=%d N_o=%d N_p=%d runs=%d: %.2f Hz (mean %.3f ms, p95 %.3f ms)\n", r.iters,
              cfg.bench.n_o, cfg.bench.n_p, r.runs, r.hz, r.mean_ms, r.p95_ms);
  for (std::size_t k = 0; k < r.per_iteration_ms.size(); ++k) {
    std::printf("  iteration %zu: %.3f ms\n", k + 1, r.per_iteration_ms[k]);
  }
  if (!out.empty()) std::ofstream(out) << bench_json(r).dump(2) << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  // Keep large activation buffers on the heap free list instead of
  // mapping and unmapping them every iteration.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);

  CLI::App app{"Category-level 9DoF pose refinement and tracking"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--seed", g.seed, "Random seed (overrides config)");
  app.add_option("--threads", g.threads, "Worker thread cap")->check(CLI::PositiveNumber);
  app.add_flag("--deterministic", g.deterministic, "Single worker, reproducible output");

  std::function<int()> run;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  std::string gen_out;
  std::optional<int> gen_samples;
  int gen_sequences = 0;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--samples", gen_samples, "Samples per category");
  gen->add_option("--sequences", gen_sequences, "Write this many tracking sequences instead");
  gen->callback([&] { run = [&] { return cmd_gen_data(g, gen_out, gen_samples, gen_sequences); }; });

  auto* tr = app.add_subcommand("train", "Train a refiner");
  std::string tr_data, tr_out, tr_resume, tr_log;
  std::optional<int> tr_epochs;
  tr->add_option("--data", tr_data, "Dataset directory")->required();
  tr->add_option("--out", tr_out, "Checkpoint path")->required();
  tr->add_option("--epochs", tr_epochs, "Total epochs (overrides config)");
  tr->add_option("--resume", tr_resume, "Continue from this checkpoint");
  tr->add_option("--log", tr_log, "JSON-lines log (default <out>.log.jsonl)");
  tr->callback([&] { run = [&] { return cmd_train(g, tr_data, tr_out, tr_epochs, tr_resume, tr_log); }; });

  auto* rf = app.add_subcommand("refine", "Refine stored initial poses");
  std::string rf_ckpt, rf_data, rf_out;
  int rf_iters = 4;
  rf->add_option("--ckpt", rf_ckpt, "Checkpoint")->required();
  rf->add_option("--data", rf_data, "Dataset directory")->required();
  rf->add_option("--iters", rf_iters, "Refinement iterations");
  rf->add_option("--out", rf_out, "Predictions file")->required();
  rf->callback([&] { run = [&] { return cmd_refine(g, rf_ckpt, rf_data, rf_iters, rf_out); }; });

  auto* tk = app.add_subcommand("track", "Track poses through sequences");
  std::string tk_ckpt, tk_seq, tk_out;
  std::optional<int> tk_iters;
  tk->add_option("--ckpt", tk_ckpt, "Checkpoint")->required();
  tk->add_option("--seq", tk_seq, "Sequence directory, or a directory of them")->required();
  tk->add_option("--out", tk_out, "JSON-lines frame log")->required();
  tk->add_option("--iters", tk_iters, "Iterations per frame");
  tk->callback([&] { run = [&] { return cmd_track(g, tk_ckpt, tk_seq, tk_out, tk_iters); }; });

  auto* ev = app.add_subcommand("eval", "Score predictions");
  std::string ev_preds, ev_out, ev_data;
  ev->add_option("--preds", ev_preds, "Predictions file")->required();
  ev->add_option("--out", ev_out, "Report path (.json and .csv are both written)")->required();
  ev->add_option("--data", ev_data, "Dataset directory (default: the one recorded in the predictions)");
  ev->callback([&] { run = [&] { return cmd_eval(g, ev_preds, ev_out, ev_data); }; });

  auto* bn = app.add_subcommand("bench", "Measure refinement throughput");
  std::string bn_ckpt, bn_out;
  std::optional<int> bn_iters, bn_runs;
  bn->add_option("--ckpt", bn_ckpt, "Checkpoint (default: fresh 1024-point model)");
  bn->add_option("--iters", bn_iters, "Iterations per refinement");
  bn->add_option("--runs", bn_runs, "Timed runs");
  bn->add_option("--out", bn_out, "JSON report");
  bn->callback([&] { run = [&] { return cmd_bench(g, bn_ckpt, bn_iters, bn_runs, bn_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  try {
    return run();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kInvalidConfig ? kUsage : kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}
