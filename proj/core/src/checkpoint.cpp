#include "catre/checkpoint.hpp"

#include <string>

#include "binary_io.hpp"

namespace catre {

namespace {

using autonet::Matrix;
using autonet::ModelHyper;
using autonet::RefinerModel;
using detail::ByteReader;
using detail::ByteWriter;

constexpr std::string_view kMagic = "CATW";
// Refuse absurd sizes from corrupt headers before allocating.
constexpr std::uint32_t kMaxDim = 1u << 24;

void put_hyper(ByteWriter& w, const ModelHyper& h) {
  for (int v : {h.n_o, h.n_p, h.point_dim, h.global_dim, h.enc_hidden, h.enc_wide, h.rot_hidden,
                h.gn_groups, h.ts_hidden1, h.ts_hidden2}) {
    w.put<std::int32_t>(v);
  }
  w.put<std::uint8_t>(h.t_net ? 1 : 0);
  w.put<std::uint8_t>(h.predict_size ? 1 : 0);
}

ModelHyper get_hyper(ByteReader& r) {
  ModelHyper h;
  for (int* v : {&h.n_o, &h.n_p, &h.point_dim, &h.global_dim, &h.enc_hidden, &h.enc_wide,
                 &h.rot_hidden, &h.gn_groups, &h.ts_hidden1, &h.ts_hidden2}) {
    *v = r.get<std::int32_t>();
  }
  h.t_net = r.get<std::uint8_t>() != 0;
  h.predict_size = r.get<std::uint8_t>() != 0;
  try {
    h.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kFormat, std::string("bad hyperparameter block: ") + e.what());
  }
  return h;
}

template <typename T>
void put_matrix(ByteWriter& w, const Matrix<T>& m) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
  // Row-major on disk.
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) w.put<T>(m(i, k));
  }
}

template <typename T>
Matrix<T> get_matrix(ByteReader& r) {
  const auto rows = r.get<std::uint32_t>();
  const auto cols = r.get<std::uint32_t>();
  if (rows > kMaxDim || cols > kMaxDim ||
      static_cast<std::uint64_t>(rows) * cols * sizeof(T) > r.remaining()) {
    throw Error(ErrorKind::kFormat, "matrix block exceeds file size");
  }
  Matrix<T> m(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t k = 0; k < cols; ++k) m(i, k) = r.get<T>();
  }
  return m;
}

template <typename T>
void put_matrices(ByteWriter& w, const std::vector<Matrix<T>>& ms) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ms.size()));
  for (const auto& m : ms) put_matrix(w, m);
}

template <typename T>
std::vector<Matrix<T>> get_matrices(ByteReader& r) {
  const auto n = r.get<std::uint32_t>();
  if (n > kMaxDim) throw Error(ErrorKind::kFormat, "implausible matrix count");
  std::vector<Matrix<T>> out;
  out.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(get_matrix<T>(r));
  return out;
}

}  // namespace

template <typename T>
std::vector<unsigned char> encode_checkpoint(const Checkpoint<T>& ckpt) {
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(sizeof(T));
  put_hyper(w, ckpt.model.hyper());

  const auto params = ckpt.model.named_parameters();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, tensor] : params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_bytes(name);
    put_matrix(w, tensor.value());
  }

  w.put<std::int64_t>(ckpt.opt.t);
  put_matrices(w, ckpt.opt.m);
  put_matrices(w, ckpt.opt.v);
  put_matrices(w, ckpt.opt.slow);
  w.put<std::int64_t>(ckpt.epoch);
  w.put<std::int64_t>(ckpt.step);

  const std::string meta = ckpt.meta.dump();
  w.put<std::uint32_t>(static_cast<std::uint32_t>(meta.size()));
  w.put_bytes(meta);
  return std::move(w.bytes());
}

template <typename T>
Checkpoint<T> decode_checkpoint(const std::vector<unsigned char>& bytes) {
  ByteReader r(bytes);
  if (r.get_string(kMagic.size()) != kMagic) {
    throw Error(ErrorKind::kFormat, "not a checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kVersionMismatch,
                "checkpoint version " + std::to_string(version) + ", expected " +
                    std::to_string(kCheckpointVersion));
  }
  const auto width = r.get<std::uint32_t>();
  if (width != sizeof(T)) {
    throw Error(ErrorKind::kVersionMismatch, "checkpoint stores " + std::to_string(8 * width) +
                                                 "-bit values, loader expects " +
                                                 std::to_string(8 * sizeof(T)));
  }
  Checkpoint<T> ckpt;
  ckpt.model = RefinerModel<T>(get_hyper(r), 0);

  auto params = ckpt.model.named_parameters();
  const auto n = r.get<std::uint32_t>();
  if (n != params.size()) {
    throw Error(ErrorKind::kFormat, "checkpoint has " + std::to_string(n) + " parameters, model " +
                                        std::to_string(params.size()));
  }
  for (auto& [name, tensor] : params) {
    const auto len = r.get<std::uint32_t>();
    if (len > 4096) throw Error(ErrorKind::kFormat, "implausible parameter name length");
    const std::string got = r.get_string(len);
    if (got != name) {
      throw Error(ErrorKind::kFormat, "expected parameter '" + name + "', found '" + got + "'");
    }
    Matrix<T> value = get_matrix<T>(r);
    if (value.rows() != tensor.rows() || value.cols() != tensor.cols()) {
      throw Error(ErrorKind::kFormat, "shape mismatch for parameter '" + name + "'");
    }
    tensor.mutable_value() = std::move(value);
  }

  ckpt.opt.t = r.get<std::int64_t>();
  ckpt.opt.m = get_matrices<T>(r);
  ckpt.opt.v = get_matrices<T>(r);
  ckpt.opt.slow = get_matrices<T>(r);
  auto check_state = [&](const std::vector<Matrix<T>>& ms, const char* what) {
    if (ms.empty()) return;
    if (ms.size() != params.size()) {
      throw Error(ErrorKind::kFormat, std::string("optimizer ") + what + " count mismatch");
    }
    for (std::size_t i = 0; i < ms.size(); ++i) {
      if (ms[i].rows() != params[i].second.rows() || ms[i].cols() != params[i].second.cols()) {
        throw Error(ErrorKind::kFormat, std::string("optimizer ") + what + " shape mismatch");
      }
    }
  };
  check_state(ckpt.opt.m, "first moment");
  check_state(ckpt.opt.v, "second moment");
  check_state(ckpt.opt.slow, "lookahead");
  ckpt.epoch = r.get<std::int64_t>();
  ckpt.step = r.get<std::int64_t>();

  const auto meta_len = r.get<std::uint32_t>();
  const std::string meta = r.get_string(meta_len);
  try {
    ckpt.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("checkpoint metadata: ") + e.what());
  }
  if (!r.at_end()) throw Error(ErrorKind::kFormat, "trailing bytes after checkpoint");
  return ckpt;
}

template <typename T>
void save_checkpoint(const Checkpoint<T>& ckpt, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // Write then rename so an interrupted save never leaves a torn file.
  auto tmp = path;
  tmp += ".tmp";
  detail::write_file(tmp, encode_checkpoint(ckpt));
  std::filesystem::rename(tmp, path);
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint<T>(detail::read_file(path));
}

template <typename T>
Checkpoint<T> to_checkpoint(const TrainState<T>& state, nlohmann::json meta) {
  Checkpoint<T> ckpt;
  ckpt.model = state.model.clone();
  ckpt.opt = state.opt;
  ckpt.epoch = state.epoch;
  ckpt.step = state.step;
  ckpt.meta = meta.is_null() ? nlohmann::json::object() : std::move(meta);
  return ckpt;
}

template <typename T>
TrainState<T> to_train_state(Checkpoint<T> ckpt) {
  TrainState<T> state;
  state.model = std::move(ckpt.model);
  state.opt = std::move(ckpt.opt);
  state.epoch = ckpt.epoch;
  state.step = ckpt.step;
  return state;
}

#define CATRE_INSTANTIATE(T)                                                                   \
  template std::vector<unsigned char> encode_checkpoint(const Checkpoint<T>&);                 \
  template Checkpoint<T> decode_checkpoint(const std::vector<unsigned char>&);                 \
  template void save_checkpoint(const Checkpoint<T>&, const std::filesystem::path&);           \
  template Checkpoint<T> load_checkpoint(const std::filesystem::path&);                        \
  template Checkpoint<T> to_checkpoint(const TrainState<T>&, nlohmann::json);                 \
  template TrainState<T> to_train_state(Checkpoint<T>);

CATRE_INSTANTIATE(float)
CATRE_INSTANTIATE(double)
#undef CATRE_INSTANTIATE

}  // namespace catre
