#include "catre/autonet/tensor.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <string>
#include <unordered_set>

namespace catre::autonet {

namespace {

template <typename T>
using RowMajor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

[[noreturn]] void shape_error(const std::string& op, Index ar, Index ac, Index br, Index bc) {
  throw Error(ErrorKind::kShapeMismatch, op + ": (" + std::to_string(ar) + "x" +
                                             std::to_string(ac) + ") vs (" + std::to_string(br) +
                                             "x" + std::to_string(bc) + ")");
}

template <typename T>
Node<T>& in(Node<T>& n, std::size_t i) {
  return *n.inputs[i];
}

enum class Broadcast { kNone, kRow, kScalar };

template <typename T>
Broadcast broadcast_kind(const std::string& op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kNone;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::kScalar;
  shape_error(op, a.rows(), a.cols(), b.rows(), b.cols());
}

template <typename T>
Matrix<T> expand(const Matrix<T>& b, Broadcast kind, Index rows, Index cols) {
  switch (kind) {
    case Broadcast::kNone: return b;
    case Broadcast::kRow: {
      Matrix<T> out(rows, cols);
      for (Index j = 0; j < cols; ++j) out.col(j).setConstant(b(0, j));
      return out;
    }
    case Broadcast::kScalar: return Matrix<T>::Constant(rows, cols, b(0, 0));
  }
  return b;
}

template <typename T>
Matrix<T> reduce_to(const Matrix<T>& g, Broadcast kind) {
  switch (kind) {
    case Broadcast::kNone: return g;
    case Broadcast::kRow: return g.colwise().sum();
    case Broadcast::kScalar: return Matrix<T>::Constant(1, 1, g.sum());
  }
  return g;
}

}  // namespace

// ---- Tensor ---------------------------------------------------------------

template <typename T>
Tensor<T> Tensor<T>::constant(Matrix<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return Tensor(std::move(n));
}

template <typename T>
Tensor<T> Tensor<T>::parameter(Matrix<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = true;
  return Tensor(std::move(n));
}

template <typename T>
Tensor<T> Tensor<T>::make(Matrix<T> value, std::vector<Tensor> inputs,
                          std::function<void(Node<T>&)> backward_fn) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  for (const auto& t : inputs) n->requires_grad = n->requires_grad || t.requires_grad();
  if (n->requires_grad) {
    n->inputs.reserve(inputs.size());
    for (auto& t : inputs) n->inputs.push_back(t.node_);
    n->backward_fn = std::move(backward_fn);
  }
  return Tensor(std::move(n));
}

template <typename T>
T Tensor<T>::item() const {
  if (rows() != 1 || cols() != 1) shape_error("item", rows(), cols(), 1, 1);
  return value()(0, 0);
}

template <typename T>
void Tensor<T>::backward() const {
  if (rows() != 1 || cols() != 1) {
    throw Error(ErrorKind::kBackwardOnNonScalar,
                "backward() on a " + std::to_string(rows()) + "x" + std::to_string(cols()) +
                    " tensor");
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      Node<T>* child = n->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->accumulate(Matrix<T>::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->backward_fn || n->grad.size() == 0) continue;
    n->backward_fn(*n);
    n->grad.resize(0, 0);  // interior grads are consumed
  }
}

// ---- linear algebra ----------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a.rows(), a.cols(), b.rows(), b.cols());
  Matrix<T> out = a.value() * b.value();
  return Tensor<T>::make(std::move(out), {a, b}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    Node<T>& y = in(n, 1);
    if (x.requires_grad) x.accumulate_product(n.grad * y.value.transpose());
    if (y.requires_grad) y.accumulate_product(x.value.transpose() * n.grad);
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  Matrix<T> out = a.value().transpose();
  return Tensor<T>::make(std::move(out), {a},
                         [](Node<T>& n) { in(n, 0).accumulate(n.grad.transpose()); });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const Broadcast kind = broadcast_kind("add", a, b);
  Matrix<T> out = a.value();
  switch (kind) {
    case Broadcast::kNone: out += b.value(); break;
    case Broadcast::kRow: out.rowwise() += b.value().row(0); break;
    case Broadcast::kScalar: out.array() += b.value()(0, 0); break;
  }
  return Tensor<T>::make(std::move(out), {a, b}, [kind](Node<T>& n) {
    if (in(n, 0).requires_grad) in(n, 0).accumulate(n.grad);
    if (in(n, 1).requires_grad) in(n, 1).accumulate(reduce_to(n.grad, kind));
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  const Broadcast kind = broadcast_kind("sub", a, b);
  Matrix<T> out = a.value();
  switch (kind) {
    case Broadcast::kNone: out -= b.value(); break;
    case Broadcast::kRow: out.rowwise() -= b.value().row(0); break;
    case Broadcast::kScalar: out.array() -= b.value()(0, 0); break;
  }
  return Tensor<T>::make(std::move(out), {a, b}, [kind](Node<T>& n) {
    if (in(n, 0).requires_grad) in(n, 0).accumulate(n.grad);
    if (in(n, 1).requires_grad) in(n, 1).accumulate(-reduce_to(n.grad, kind));
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const Broadcast kind = broadcast_kind("mul", a, b);
  Matrix<T> bx = expand(b.value(), kind, a.rows(), a.cols());
  Matrix<T> out = a.value().cwiseProduct(bx);
  return Tensor<T>::make(std::move(out), {a, b}, [kind, bx = std::move(bx)](Node<T>& n) {
    Node<T>& x = in(n, 0);
    Node<T>& y = in(n, 1);
    if (x.requires_grad) x.accumulate(n.grad.cwiseProduct(bx));
    if (y.requires_grad) y.accumulate(reduce_to<T>(n.grad.cwiseProduct(x.value), kind));
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return Tensor<T>::make(a.value() * factor, {a},
                         [factor](Node<T>& n) { in(n, 0).accumulate(n.grad * factor); });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T value) {
  Matrix<T> out = a.value().array() + value;
  return Tensor<T>::make(std::move(out), {a}, [](Node<T>& n) { in(n, 0).accumulate(n.grad); });
}

// ---- shape ops -------------------------------------------------------------

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  if (parts.empty()) throw Error(ErrorKind::kShapeMismatch, "concat of nothing");
  Index rows = 0, cols = 0;
  for (const auto& p : parts) {
    if (axis == 0) {
      if (p.cols() != parts[0].cols()) shape_error("concat", parts[0].rows(), parts[0].cols(), p.rows(), p.cols());
      rows += p.rows();
      cols = p.cols();
    } else {
      if (p.rows() != parts[0].rows()) shape_error("concat", parts[0].rows(), parts[0].cols(), p.rows(), p.cols());
      cols += p.cols();
      rows = p.rows();
    }
  }
  Matrix<T> out(rows, cols);
  std::vector<Index> offsets;
  Index off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    if (axis == 0) {
      out.middleRows(off, p.rows()) = p.value();
      off += p.rows();
    } else {
      out.middleCols(off, p.cols()) = p.value();
      off += p.cols();
    }
  }
  return Tensor<T>::make(std::move(out), parts, [axis, offsets](Node<T>& n) {
    for (std::size_t i = 0; i < n.inputs.size(); ++i) {
      Node<T>& p = in(n, i);
      if (!p.requires_grad) continue;
      if (axis == 0) {
        p.accumulate(n.grad.middleRows(offsets[i], p.value.rows()));
      } else {
        p.accumulate(n.grad.middleCols(offsets[i], p.value.cols()));
      }
    }
  });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    shape_error("slice_cols", a.rows(), a.cols(), start, count);
  }
  return Tensor<T>::make(a.value().middleCols(start, count), {a}, [start](Node<T>& n) {
    in(n, 0).accumulate_block(0, start, n.grad);
  });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, Index start, Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    shape_error("slice_rows", a.rows(), a.cols(), start, count);
  }
  return Tensor<T>::make(a.value().middleRows(start, count), {a}, [start](Node<T>& n) {
    in(n, 0).accumulate_block(start, 0, n.grad);
  });
}

template <typename T>
Tensor<T> repeat_rows(const Tensor<T>& a, Index n_rows) {
  if (a.rows() != 1) shape_error("repeat_rows", a.rows(), a.cols(), 1, a.cols());
  Matrix<T> out(n_rows, a.cols());
  for (Index j = 0; j < a.cols(); ++j) out.col(j).setConstant(a.value()(0, j));
  return Tensor<T>::make(std::move(out), {a},
                         [](Node<T>& n) { in(n, 0).accumulate(n.grad.colwise().sum()); });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Index rows, Index cols) {
  if (rows * cols != a.rows() * a.cols()) shape_error("reshape", a.rows(), a.cols(), rows, cols);
  RowMajor<T> flat = a.value();
  Matrix<T> out = Eigen::Map<const RowMajor<T>>(flat.data(), rows, cols);
  const Index ar = a.rows(), ac = a.cols();
  return Tensor<T>::make(std::move(out), {a}, [ar, ac](Node<T>& n) {
    RowMajor<T> g = n.grad;
    in(n, 0).accumulate(Matrix<T>(Eigen::Map<const RowMajor<T>>(g.data(), ar, ac)));
  });
}

// ---- pooling and activations ----------------------------------------------

template <typename T>
Tensor<T> max_pool(const Tensor<T>& a, int axis, std::vector<Index>* argmax_out) {
  const Matrix<T>& x = a.value();
  if (x.size() == 0) throw Error(ErrorKind::kShapeMismatch, "max_pool of an empty tensor");
  std::vector<Index> arg;
  Matrix<T> out;
  if (axis == 0) {
    out.resize(1, x.cols());
    arg.resize(x.cols());
    for (Index j = 0; j < x.cols(); ++j) out(0, j) = x.col(j).maxCoeff(&arg[j]);
  } else {
    out.resize(x.rows(), 1);
    arg.resize(x.rows());
    for (Index i = 0; i < x.rows(); ++i) out(i, 0) = x.row(i).maxCoeff(&arg[i]);
  }
  if (argmax_out) *argmax_out = arg;
  return Tensor<T>::make(std::move(out), {a}, [axis, arg = std::move(arg)](Node<T>& n) {
    Node<T>& x = in(n, 0);
    Matrix<T> g = Matrix<T>::Zero(x.value.rows(), x.value.cols());
    if (axis == 0) {
      for (Index j = 0; j < g.cols(); ++j) g(arg[j], j) = n.grad(0, j);
    } else {
      for (Index i = 0; i < g.rows(); ++i) g(i, arg[i]) = n.grad(i, 0);
    }
    x.accumulate(g);
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  Matrix<T> out = a.value().cwiseMax(T(0));
  return Tensor<T>::make(std::move(out), {a}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    x.accumulate((x.value.array() > T(0)).select(n.grad, T(0)));
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  static constexpr T k = T(0.7978845608028654);  // sqrt(2/pi)
  static constexpr T c = T(0.044715);
  const auto x = a.value().array();
  Matrix<T> th = (k * (x + c * x.cube())).tanh().matrix();
  Matrix<T> out = (T(0.5) * x * (T(1) + th.array())).matrix();
  return Tensor<T>::make(std::move(out), {a}, [th = std::move(th)](Node<T>& n) {
    Node<T>& in0 = in(n, 0);
    const auto x = in0.value.array();
    const auto t = th.array();
    const auto d = T(0.5) * (T(1) + t) +
                   T(0.5) * x * (T(1) - t.square()) * k * (T(1) + T(3) * c * x.square());
    in0.accumulate((n.grad.array() * d).matrix());
  });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& a) {
  return Tensor<T>::make(a.value().cwiseAbs(), {a}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    x.accumulate((n.grad.array() * x.value.array().sign()).matrix());
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  Matrix<T> out = Matrix<T>::Constant(1, 1, a.value().sum());
  return Tensor<T>::make(std::move(out), {a}, [](Node<T>& n) {
    Node<T>& x = in(n, 0);
    x.accumulate(Matrix<T>::Constant(x.value.rows(), x.value.cols(), n.grad(0, 0)));
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  return scale(sum(a), T(1) / static_cast<T>(a.rows() * a.cols()));
}

// ---- normalization and layers ---------------------------------------------------

template <typename T>
Tensor<T> group_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     int groups, T eps) {
  const Index n = x.rows(), c = x.cols();
  if (groups <= 0 || c % groups != 0) shape_error("group_norm groups", n, c, groups, 0);
  if (gamma.rows() != 1 || gamma.cols() != c) shape_error("group_norm gamma", n, c, gamma.rows(), gamma.cols());
  if (beta.rows() != 1 || beta.cols() != c) shape_error("group_norm beta", n, c, beta.rows(), beta.cols());
  const Index cg = c / groups;
  const T count = static_cast<T>(n * cg);

  Matrix<T> xhat(n, c);
  std::vector<T> inv_std(groups);
  for (int g = 0; g < groups; ++g) {
    const auto block = x.value().middleCols(g * cg, cg).array();
    const T mu = block.sum() / count;
    const T var = (block - mu).square().sum() / count;
    inv_std[g] = T(1) / std::sqrt(var + eps);
    xhat.middleCols(g * cg, cg) = ((block - mu) * inv_std[g]).matrix();
  }
  Matrix<T> out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() +
                  beta.value().row(0).array();

  return Tensor<T>::make(
      std::move(out), {x, gamma, beta},
      [groups, cg, count, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& node) {
        Node<T>& xin = in(node, 0);
        Node<T>& gm = in(node, 1);
        Node<T>& bt = in(node, 2);
        const Matrix<T>& g = node.grad;
        if (gm.requires_grad) gm.accumulate(g.cwiseProduct(xhat).colwise().sum());
        if (bt.requires_grad) bt.accumulate(g.colwise().sum());
        if (!xin.requires_grad) return;
        Matrix<T> dxhat = g.array().rowwise() * gm.value.row(0).array();
        Matrix<T> dx(g.rows(), g.cols());
        for (int k = 0; k < groups; ++k) {
          const auto dh = dxhat.middleCols(k * cg, cg).array();
          const auto xh = xhat.middleCols(k * cg, cg).array();
          const T sum_dh = dh.sum();
          const T sum_dh_xh = (dh * xh).sum();
          dx.middleCols(k * cg, cg) =
              ((count * dh - sum_dh - xh * sum_dh_xh) * (inv_std[k] / count)).matrix();
        }
        xin.accumulate(dx);
      });
}

template <typename T>
Tensor<T> per_point_linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.cols() != weight.cols()) shape_error("per_point_linear", x.rows(), x.cols(), weight.rows(), weight.cols());
  if (bias.rows() != 1 || bias.cols() != weight.rows()) {
    shape_error("per_point_linear bias", weight.rows(), weight.cols(), bias.rows(), bias.cols());
  }
  Matrix<T> out(x.rows(), weight.rows());
  out.noalias() = x.value() * weight.value().transpose();
  out.rowwise() += bias.value().row(0);

  return Tensor<T>::make(std::move(out), {x, weight, bias}, [](Node<T>& n) {
    Node<T>& xin = in(n, 0);
    Node<T>& w = in(n, 1);
    Node<T>& b = in(n, 2);
    const Matrix<T>& g = n.grad;
    if (b.requires_grad) b.accumulate(g.colwise().sum());

    if (w.requires_grad) {
      if (g.rows() == 1) {
        // Outer product; the general product path would pack and zero-fill.
        using Col = Eigen::Matrix<T, Eigen::Dynamic, 1>;
        using Row = Eigen::Matrix<T, 1, Eigen::Dynamic>;
        w.accumulate_product(Eigen::Map<const Col>(g.data(), g.cols()) *
                             Eigen::Map<const Row>(xin.value.data(), xin.value.cols()));
      } else {
        w.accumulate_product(g.transpose() * xin.value);
      }
    }
    if (xin.requires_grad) xin.accumulate_product(g * w.value);
  });
}

template <typename T>
Tensor<T> gram_schmidt_6d(const Tensor<T>& rx, const Tensor<T>& ry) {
  using V = Eigen::Matrix<T, 3, 1>;
  if (rx.rows() * rx.cols() != 3 || ry.rows() * ry.cols() != 3) {
    shape_error("gram_schmidt_6d", rx.rows(), rx.cols(), ry.rows(), ry.cols());
  }
  const T eps = T(1e-8);
  const V a = Eigen::Map<const V>(rx.value().data());
  const V b = Eigen::Map<const V>(ry.value().data());
  const T na = a.norm();
  if (!(na > eps)) throw Error(ErrorKind::kDegenerateInput, "first 6D column is ~zero");
  const V c1 = a / na;
  const V u = b - b.dot(c1) * c1;
  const T nu = u.norm();
  if (!(nu > eps)) throw Error(ErrorKind::kDegenerateInput, "6D columns are parallel");
  const V c2 = u / nu;
  Matrix<T> out(3, 3);
  out.col(0) = c1;
  out.col(1) = c2;
  out.col(2) = c1.cross(c2);

  return Tensor<T>::make(std::move(out), {rx, ry}, [a, b, c1, c2, na, nu](Node<T>& n) {
    const V g1 = n.grad.col(0), g2 = n.grad.col(1), g3 = n.grad.col(2);
    // c3 = c1 x c2
    V gc1 = g1 + c2.cross(g3);
    const V gc2 = g2 + g3.cross(c1);
    // c2 = u / |u|
    const V gu = (gc2 - c2 * c2.dot(gc2)) / nu;
    // u = b - (b.c1) c1
    const V gb = gu - c1 * c1.dot(gu);
    gc1 -= b.dot(c1) * gu + c1.dot(gu) * b;
    // c1 = a / |a|
    const V ga = (gc1 - c1 * c1.dot(gc1)) / na;
    Node<T>& x = in(n, 0);
    Node<T>& y = in(n, 1);
    if (x.requires_grad) x.accumulate(Matrix<T>(Eigen::Map<const Matrix<T>>(ga.data(), x.value.rows(), x.value.cols())));
    if (y.requires_grad) y.accumulate(Matrix<T>(Eigen::Map<const Matrix<T>>(gb.data(), y.value.rows(), y.value.cols())));
  });
}

template <typename T>
Tensor<T> linear_relu_max(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.cols() != weight.cols() || x.rows() < 1) {
    shape_error("linear_relu_max", x.rows(), x.cols(), weight.rows(), weight.cols());
  }
  if (bias.rows() != 1 || bias.cols() != weight.rows()) {
    shape_error("linear_relu_max bias", weight.rows(), weight.cols(), bias.rows(), bias.cols());
  }
  const Index n = x.rows(), c = weight.rows();
  // Channels along columns of a (C x N) product so the running max is a
  // vectorized elementwise select.
  Matrix<T> yt(c, n);
  yt.noalias() = weight.value() * x.value().transpose();
  using Arr = Eigen::Array<T, Eigen::Dynamic, 1>;
  Arr best = yt.col(0).array();
  Arr arg = Arr::Zero(c);
  for (Index i = 1; i < n; ++i) {
    const auto col = yt.col(i).array();
    const auto greater = col > best;
    arg = greater.select(static_cast<T>(i), arg);
    best = greater.select(col, best);
  }
  best += bias.value().row(0).transpose().array();
  std::vector<Index> rows(c);
  for (Index j = 0; j < c; ++j) rows[j] = static_cast<Index>(arg(j));
  Matrix<T> out = best.max(T(0)).matrix().transpose();

  return Tensor<T>::make(std::move(out), {x, weight, bias}, [rows = std::move(rows)](Node<T>& node) {
    Node<T>& xin = in(node, 0);
    Node<T>& w = in(node, 1);
    Node<T>& b = in(node, 2);
    Matrix<T> g = node.grad;
    g = (node.value.array() > T(0)).select(g, T(0));
    if (b.requires_grad) b.accumulate(g);
    // Column-wise gather / scatter keeps the memory access contiguous.
    const Index c = static_cast<Index>(rows.size());
    if (w.requires_grad) {
      if (w.grad.size() == 0) w.grad = Matrix<T>::Zero(c, xin.value.cols());
      for (Index k = 0; k < xin.value.cols(); ++k) {
        const T* xc = xin.value.col(k).data();
        T* dwc = w.grad.col(k).data();
        for (Index j = 0; j < c; ++j) dwc[j] += g(0, j) * xc[rows[j]];
      }
    }
    if (xin.requires_grad) {
      if (xin.grad.size() == 0) xin.grad = Matrix<T>::Zero(xin.value.rows(), xin.value.cols());
      for (Index k = 0; k < xin.value.cols(); ++k) {
        const T* wc = w.value.col(k).data();
        T* dxc = xin.grad.col(k).data();
        for (Index j = 0; j < c; ++j) dxc[rows[j]] += g(0, j) * wc[j];
      }
    }
  });
}

#define CATRE_INSTANTIATE(T)                                                              \
  template class Tensor<T>;                                                               \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> transpose(const Tensor<T>&);                                         \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> scale(const Tensor<T>&, T);                                          \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                     \
  template Tensor<T> concat(const std::vector<Tensor<T>>&, int);                          \
  template Tensor<T> slice_cols(const Tensor<T>&, Index, Index);                          \
  template Tensor<T> slice_rows(const Tensor<T>&, Index, Index);                          \
  template Tensor<T> repeat_rows(const Tensor<T>&, Index);                                \
  template Tensor<T> reshape(const Tensor<T>&, Index, Index);                             \
  template Tensor<T> max_pool(const Tensor<T>&, int, std::vector<Index>*);                \
  template Tensor<T> relu(const Tensor<T>&);                                              \
  template Tensor<T> gelu(const Tensor<T>&);                                              \
  template Tensor<T> abs(const Tensor<T>&);                                               \
  template Tensor<T> sum(const Tensor<T>&);                                               \
  template Tensor<T> mean(const Tensor<T>&);                                              \
  template Tensor<T> group_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, T); \
  template Tensor<T> per_point_linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);   \
  template Tensor<T> linear_relu_max(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> gram_schmidt_6d(const Tensor<T>&, const Tensor<T>&);

CATRE_INSTANTIATE(float)
CATRE_INSTANTIATE(double)

#undef CATRE_INSTANTIATE

}  // namespace catre::autonet
