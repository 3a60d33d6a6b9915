#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "catre/autonet/model.hpp"
#include "catre/track.hpp"
#include "catre/train.hpp"

namespace catre {

struct DataConfig {
  std::vector<std::string> categories = {"bowl", "laptop"};
  int samples_per_category = 500;
  SceneConfig scene;
};

struct TrackRunConfig {
  int sequences = 20;
  SequenceConfig sequence;
  TrackConfig track;
};

/// Every section of a run. Unknown keys anywhere are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  bool deterministic = false;
  DataConfig data;
  autonet::ModelHyper model;
  TrainConfig train;
  int refine_iters = 4;
  TrackRunConfig track;
  BenchConfig bench;

  /// Syncs derived fields (seeds, prior size, size head) and validates.
  /// Throws kInvalidConfig.
  void finalize();
  std::vector<CategorySpec> category_specs() const;
};

RunConfig default_run_config();
/// Overlays `j` on `base`. Throws kInvalidConfig on unknown keys or bad types.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = default_run_config());
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace catre
