#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "catre/train.hpp"

namespace catre {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume training or run inference. `meta` carries
/// run context (prior kind, categories, mode) as free-form JSON.
template <typename T>
struct Checkpoint {
  autonet::RefinerModel<T> model;
  OptimizerState<T> opt;
  std::int64_t epoch = 0;
  std::int64_t step = 0;
  nlohmann::json meta = nlohmann::json::object();
};

/// Layout: "CATW", u32 version, u32 scalar width (4 or 8), hyperparameter
/// block, named parameters (u32 name length, name, u32 rows, u32 cols,
/// values), optimizer block, i64 epoch, i64 step, u32 meta length, meta JSON.
/// All little-endian.
template <typename T>
std::vector<unsigned char> encode_checkpoint(const Checkpoint<T>& ckpt);
/// Throws kFormat on bad magic, truncation or mismatched parameter names,
/// kVersionMismatch on an unknown version or scalar width.
template <typename T>
Checkpoint<T> decode_checkpoint(const std::vector<unsigned char>& bytes);

template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::filesystem::path& path);
template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path);

template <typename T>
Checkpoint<T> to_checkpoint(const TrainState<T>& state, nlohmann::json meta = {});
template <typename T>
TrainState<T> to_train_state(Checkpoint<T> ckpt);

}  // namespace catre
