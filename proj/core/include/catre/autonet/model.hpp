#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "catre/autonet/tensor.hpp"
#include "catre/geometry.hpp"
#include "catre/priors.hpp"

namespace catre::autonet {

/// Architecture hyperparameters. The per-point feature width plus the
/// global width is the encoder output dimension (64 + 1024 = 1088 by default).
struct ModelHyper {
  int n_o = 1024;
  int n_p = 1024;
  int point_dim = 64;
  int global_dim = 1024;
  int enc_hidden = 64;
  int enc_wide = 128;
  int rot_hidden = 256;
  int gn_groups = 8;
  int ts_hidden1 = 512;
  int ts_hidden2 = 256;
  bool t_net = false;
  /// false: instance-level 6DoF refiner (no size input, no size head).
  bool predict_size = true;

  int feature_dim() const { return point_dim + global_dim; }
  int n_total() const { return n_o + n_p; }
  /// Throws kInvalidConfig on inconsistent values.
  void validate() const;
  bool operator==(const ModelHyper&) const = default;
};

template <typename T>
struct Linear {
  Tensor<T> weight;  // out x in
  Tensor<T> bias;    // 1 x out
};

template <typename T>
struct TNet {
  Linear<T> conv1, conv2, fc1, fc2;
};

template <typename T>
struct RotBranch {
  Linear<T> fc1;
  Tensor<T> gn_gamma, gn_beta;
  Linear<T> fc2;
  Tensor<T> agg_weight;  // 1 x (n_o + n_p), trainable fusion over points
  Tensor<T> agg_bias;    // 1 x 1
};

/// Parameter set for the shared encoder and both heads. Copies share
/// parameter storage; use clone() for an independent copy.
template <typename T>
class RefinerModel {
 public:
  RefinerModel() = default;
  /// Fan-in uniform init; output layers start at the identity delta.
  RefinerModel(const ModelHyper& hyper, std::uint64_t seed);

  const ModelHyper& hyper() const { return hyper_; }

  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const;
  std::size_t parameter_count() const;
  void zero_grad();
  RefinerModel clone() const;
  template <typename U>
  RefinerModel<U> cast() const;

  std::vector<Linear<T>> encoder;  // 3 -> 64 -> 64 | -> 64 -> 128 -> 1024
  std::optional<TNet<T>> t_net;
  RotBranch<T> rot_x, rot_y;
  Linear<T> ts_fc1, ts_fc2, t_out;
  std::optional<Linear<T>> s_out;

 private:
  template <typename U>
  friend class RefinerModel;
  ModelHyper hyper_;
};

/// Per-point features (N x point_dim) and the max-pooled global feature
/// (1 x global_dim) before the global one is tiled onto every point.
template <typename T>
struct Encoded {
  Tensor<T> point_feat;
  Tensor<T> global;

  /// N x (point_dim + global_dim)
  Tensor<T> dense() const;
};

template <typename T>
Encoded<T> encode(const Tensor<T>& points, const RefinerModel<T>& model);

/// N x 1088 embedding of an N x 3 point set.
template <typename T>
Tensor<T> encoder_forward(const Tensor<T>& points, const RefinerModel<T>& model);

template <typename T>
struct RotOutput {
  Tensor<T> rx, ry;  // 1 x 3 each
};

template <typename T>
struct TsOutput {
  Tensor<T> t_delta;  // 1 x 3
  Tensor<T> s_delta;  // 1 x 3, undefined for instance-level models
};

/// Rot-Head on the concatenated (n_o + n_p) x 1088 feature.
template <typename T>
RotOutput<T> rot_head_forward(const Tensor<T>& f_op, const RefinerModel<T>& model);
/// Same result without materializing the tiled global features.
template <typename T>
RotOutput<T> rot_head_forward(const Encoded<T>& observed, const Encoded<T>& prior,
                              const RefinerModel<T>& model);

/// TS-Head on the observed N x 1088 feature. `s_init` is 1 x 3 and ignored
/// by instance-level models.
template <typename T>
TsOutput<T> ts_head_forward(const Tensor<T>& f_o, const Tensor<T>& s_init,
                            const RefinerModel<T>& model);
template <typename T>
TsOutput<T> ts_head_forward(const Encoded<T>& observed, const Tensor<T>& s_init,
                            const RefinerModel<T>& model);

/// One refinement step as a differentiable graph.
template <typename T>
struct RefineGraph {
  RotOutput<T> rot;
  TsOutput<T> ts;
  Tensor<T> r_delta;  // 3 x 3
  Tensor<T> r_est;    // 3 x 3, r_delta * r_init
  Tensor<T> t_est;    // 1 x 3
  Tensor<T> s_est;    // 1 x 3 (equals s_init for instance-level models)

  /// Detached estimate; sizes are floored at `min_size` so the result is
  /// usable as the next initial pose.
  Pose9D estimate(double min_size = 1e-3) const;
};

/// observed: n_o points (camera frame); prior: n_p points. Instance-level
/// models expect metric prior points and skip the size product.
template <typename T>
RefineGraph<T> forward_refine_graph(const PointCloud& observed, const ShapePrior& prior,
                                    const Pose9D& init, const RefinerModel<T>& model);

struct RefineResult {
  PoseDelta delta;
  Pose9D est;
};

/// Inference form: throws kInvalidSize when the composed size is not positive.
template <typename T>
RefineResult forward_refine(const PointCloud& observed, const ShapePrior& prior,
                            const Pose9D& init, const RefinerModel<T>& model);

template <typename T>
Matrix<T> to_matrix(const PointCloud& pts) {
  return pts.cast<T>();
}

}  // namespace catre::autonet
