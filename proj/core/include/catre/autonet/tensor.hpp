#pragma once

#include <Eigen/Core>

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "catre/error.hpp"

// Minimal reverse-mode differentiation over dense 2-D arrays. Point sets are
// laid out as rows (N x C); vectors are 1 x C.
namespace catre::autonet {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

template <typename T>
struct Node {
  Matrix<T> value;
  Matrix<T> grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this->grad and accumulates into inputs' grads.
  std::function<void(Node&)> backward_fn;

  void accumulate(const Matrix<T>& g) {
    if (grad.size() == 0) {
      grad = g;
    } else {
      grad += g;
    }
  }
  void accumulate(Matrix<T>&& g) {
    if (grad.size() == 0) {
      grad = std::move(g);
    } else {
      grad += g;
    }
  }
  /// Evaluates a product straight into grad, skipping the temporary.
  template <typename Product>
  void accumulate_product(const Product& p) {
    if (grad.size() == 0) {
      grad.resize(p.rows(), p.cols());
      grad.noalias() = p;
    } else {
      grad.noalias() += p;
    }
  }
  /// Adds `g` into the block of grad starting at (row, col).
  void accumulate_block(Eigen::Index row, Eigen::Index col, const Matrix<T>& g) {
    if (grad.size() == 0) grad = Matrix<T>::Zero(value.rows(), value.cols());
    grad.block(row, col, g.rows(), g.cols()) += g;
  }
};

template <typename T>
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix<T> value);
  static Tensor parameter(Matrix<T> value);
  /// Interior node; requires_grad is inherited from `inputs`.
  static Tensor make(Matrix<T> value, std::vector<Tensor> inputs,
                     std::function<void(Node<T>&)> backward_fn);

  bool defined() const { return node_ != nullptr; }
  const Matrix<T>& value() const { return node_->value; }
  /// Direct write access, for optimizers and initializers.
  Matrix<T>& mutable_value() { return node_->value; }
  /// Gradient, or an empty matrix when nothing has flowed in.
  const Matrix<T>& grad() const { return node_->grad; }
  bool has_grad() const { return node_->grad.size() != 0; }
  void zero_grad() { node_->grad.resize(0, 0); }
  bool requires_grad() const { return node_->requires_grad; }

  Index rows() const { return node_->value.rows(); }
  Index cols() const { return node_->value.cols(); }
  std::array<Index, 2> shape() const { return {rows(), cols()}; }
  T item() const;

  /// Seeds d(this)/d(this) = 1 and propagates through the graph.
  /// Throws kBackwardOnNonScalar unless this is 1 x 1.
  void backward() const;

  /// Same value, cut from the graph.
  Tensor detach() const { return constant(value()); }

  /// True when both handles refer to the same storage (not a copy).
  bool same_as(const Tensor& other) const { return node_ == other.node_; }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}
  std::shared_ptr<Node<T>> node_;
};

// ---- ops --------------------------------------------------------------

template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> transpose(const Tensor<T>& a);
/// Elementwise; `b` may also be 1 x C (broadcast over rows) or 1 x 1.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T value);
/// axis 0 stacks rows, axis 1 stacks columns.
template <typename T> Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis);
template <typename T> Tensor<T> slice_cols(const Tensor<T>& a, Index start, Index count);
template <typename T> Tensor<T> slice_rows(const Tensor<T>& a, Index start, Index count);
/// 1 x C -> n x C
template <typename T> Tensor<T> repeat_rows(const Tensor<T>& a, Index n);
/// Row-major reinterpretation.
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Index rows, Index cols);
/// axis 0: max over rows (1 x C); axis 1: max over columns (N x 1). The
/// gradient is routed to the first argmax slot only.
template <typename T>
Tensor<T> max_pool(const Tensor<T>& a, int axis, std::vector<Index>* argmax = nullptr);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
/// tanh approximation.
template <typename T> Tensor<T> gelu(const Tensor<T>& a);
template <typename T> Tensor<T> abs(const Tensor<T>& a);
/// Sum of all entries, 1 x 1.
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);
/// Group normalization over an N x C point set: statistics per group of
/// C / groups channels, pooled over all N points. gamma, beta are 1 x C.
template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     int groups, T eps = T(1e-5));
/// Shared 1x1 convolution: x (N x Cin), weight (Cout x Cin), bias (1 x Cout).
template <typename T>
Tensor<T> per_point_linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);
/// max_pool(relu(per_point_linear(x, weight, bias)), 0) as one op. Only the
/// argmax rows take part in the backward pass.
template <typename T>
Tensor<T> linear_relu_max(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);
/// 3 x 3 rotation whose columns are Gram-Schmidt(rx, ry) and their cross
/// product; rx, ry are 1 x 3.
template <typename T> Tensor<T> gram_schmidt_6d(const Tensor<T>& rx, const Tensor<T>& ry);

}  // namespace catre::autonet
