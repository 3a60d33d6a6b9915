#include "catre/autonet/model.hpp"

#include <cmath>
#include <random>

namespace catre::autonet {

void ModelHyper::validate() const {
  auto positive = [](int v) { return v > 0; };
  if (!positive(n_o) || !positive(n_p) || !positive(point_dim) || !positive(global_dim) ||
      !positive(enc_hidden) || !positive(enc_wide) || !positive(rot_hidden) ||
      !positive(gn_groups) || !positive(ts_hidden1) || !positive(ts_hidden2)) {
    throw Error(ErrorKind::kInvalidConfig, "model dimensions must be positive");
  }
  if (rot_hidden % gn_groups != 0) {
    throw Error(ErrorKind::kInvalidConfig, "rot_hidden must be divisible by gn_groups");
  }
}

namespace {

template <typename T>
Linear<T> make_linear(int in, int out, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / in);
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix<T> w(out, in);
  // Row-major fill so the draw order does not depend on storage order.
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) w(r, c) = static_cast<T>(u(rng));
  }
  return {Tensor<T>::parameter(std::move(w)), Tensor<T>::parameter(Matrix<T>::Zero(1, out))};
}

template <typename T>
Linear<T> make_output(int in, int out, const std::vector<T>& bias) {
  Matrix<T> b(1, out);
  for (int c = 0; c < out; ++c) b(0, c) = bias[c];
  return {Tensor<T>::parameter(Matrix<T>::Zero(out, in)), Tensor<T>::parameter(std::move(b))};
}

template <typename T>
RotBranch<T> make_branch(const ModelHyper& h, std::mt19937_64& rng, std::vector<T> unit) {
  RotBranch<T> b;
  b.fc1 = make_linear<T>(h.feature_dim(), h.rot_hidden, rng);
  b.gn_gamma = Tensor<T>::parameter(Matrix<T>::Ones(1, h.rot_hidden));
  b.gn_beta = Tensor<T>::parameter(Matrix<T>::Zero(1, h.rot_hidden));
  b.fc2 = make_output<T>(h.rot_hidden, 3, unit);
  b.agg_weight = Tensor<T>::parameter(Matrix<T>::Constant(1, h.n_total(), T(1) / h.n_total()));
  b.agg_bias = Tensor<T>::parameter(Matrix<T>::Zero(1, 1));
  return b;
}

// Visits every parameter in canonical (checkpoint) order.
template <typename M, typename F>
void visit_parameters(M& m, F&& fn) {
  auto lin = [&](const std::string& name, auto& l) {
    fn(name + ".weight", l.weight);
    fn(name + ".bias", l.bias);
  };
  for (std::size_t i = 0; i < m.encoder.size(); ++i) lin("encoder." + std::to_string(i), m.encoder[i]);
  if (m.t_net) {
    lin("tnet.conv1", m.t_net->conv1);
    lin("tnet.conv2", m.t_net->conv2);
    lin("tnet.fc1", m.t_net->fc1);
    lin("tnet.fc2", m.t_net->fc2);
  }
  auto branch = [&](const std::string& name, auto& b) {
    lin(name + ".fc1", b.fc1);
    fn(name + ".gn.gamma", b.gn_gamma);
    fn(name + ".gn.beta", b.gn_beta);
    lin(name + ".fc2", b.fc2);
    fn(name + ".agg.weight", b.agg_weight);
    fn(name + ".agg.bias", b.agg_bias);
  };
  branch("rot_x", m.rot_x);
  branch("rot_y", m.rot_y);
  lin("ts.fc1", m.ts_fc1);
  lin("ts.fc2", m.ts_fc2);
  lin("ts.t_out", m.t_out);
  if (m.s_out) lin("ts.s_out", *m.s_out);
}

template <typename T>
Matrix<T> row3(const Vec3& v) {
  Matrix<T> m(1, 3);
  m << static_cast<T>(v(0)), static_cast<T>(v(1)), static_cast<T>(v(2));
  return m;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Linear<T>& l) {
  return per_point_linear(x, l.weight, l.bias);
}

template <typename T>
Tensor<T> branch_tail(const Tensor<T>& pre_norm, const RotBranch<T>& b, const ModelHyper& h) {
  if (pre_norm.rows() != b.agg_weight.cols()) {
    throw Error(ErrorKind::kShapeMismatch,
                "Rot-Head expects " + std::to_string(b.agg_weight.cols()) + " points, got " +
                    std::to_string(pre_norm.rows()));
  }
  Tensor<T> h1 = gelu(group_norm(pre_norm, b.gn_gamma, b.gn_beta, h.gn_groups));
  Tensor<T> per_point = linear(h1, b.fc2);  // N x 3
  return add(matmul(b.agg_weight, per_point), b.agg_bias);
}

Vec3 vec3_of(const Eigen::Ref<const Eigen::MatrixXd>& m) { return {m(0, 0), m(0, 1), m(0, 2)}; }

}  // namespace

template <typename T>
RefinerModel<T>::RefinerModel(const ModelHyper& hyper, std::uint64_t seed) : hyper_(hyper) {
  hyper_.validate();
  std::mt19937_64 rng(seed);
  const ModelHyper& h = hyper_;
  encoder.push_back(make_linear<T>(3, h.enc_hidden, rng));
  encoder.push_back(make_linear<T>(h.enc_hidden, h.point_dim, rng));
  encoder.push_back(make_linear<T>(h.point_dim, h.enc_hidden, rng));
  encoder.push_back(make_linear<T>(h.enc_hidden, h.enc_wide, rng));
  encoder.push_back(make_linear<T>(h.enc_wide, h.global_dim, rng));
  if (h.t_net) {
    TNet<T> tn;
    tn.conv1 = make_linear<T>(3, 64, rng);
    tn.conv2 = make_linear<T>(64, 128, rng);
    tn.fc1 = make_linear<T>(128, 64, rng);
    tn.fc2 = make_output<T>(64, 9, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    t_net = std::move(tn);
  }
  rot_x = make_branch<T>(h, rng, {1, 0, 0});
  rot_y = make_branch<T>(h, rng, {0, 1, 0});
  const int ts_in = h.feature_dim() + (h.predict_size ? 3 : 0);
  ts_fc1 = make_linear<T>(ts_in, h.ts_hidden1, rng);
  ts_fc2 = make_linear<T>(h.ts_hidden1, h.ts_hidden2, rng);
  t_out = make_output<T>(h.ts_hidden2, 3, {0, 0, 0});
  if (h.predict_size) s_out = make_output<T>(h.ts_hidden2, 3, {0, 0, 0});
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> RefinerModel<T>::named_parameters() const {
  std::vector<std::pair<std::string, Tensor<T>>> out;
  visit_parameters(*this, [&](const std::string& name, const Tensor<T>& t) { out.emplace_back(name, t); });
  return out;
}

template <typename T>
std::size_t RefinerModel<T>::parameter_count() const {
  std::size_t n = 0;
  visit_parameters(*this, [&](const std::string&, const Tensor<T>& t) { n += t.value().size(); });
  return n;
}

template <typename T>
void RefinerModel<T>::zero_grad() {
  visit_parameters(*this, [](const std::string&, Tensor<T>& t) { t.zero_grad(); });
}

template <typename T>
RefinerModel<T> RefinerModel<T>::clone() const {
  return cast<T>();
}

template <typename T>
template <typename U>
RefinerModel<U> RefinerModel<T>::cast() const {
  RefinerModel<U> out(hyper_, 0);
  std::vector<Matrix<T>> values;
  visit_parameters(*this, [&](const std::string&, const Tensor<T>& t) { values.push_back(t.value()); });
  std::size_t i = 0;
  visit_parameters(out, [&](const std::string&, Tensor<U>& t) {
    t.mutable_value() = values[i++].template cast<U>();
  });
  return out;
}

template <typename T>
Tensor<T> Encoded<T>::dense() const {
  return concat<T>({point_feat, repeat_rows(global, point_feat.rows())}, 1);
}

template <typename T>
Encoded<T> encode(const Tensor<T>& points, const RefinerModel<T>& model) {
  if (points.cols() != 3 || points.rows() < 1) {
    throw Error(ErrorKind::kShapeMismatch, "encoder expects an N x 3 point set with N >= 1");
  }
  Tensor<T> x = points;
  if (model.t_net) {
    const auto& tn = *model.t_net;
    Tensor<T> f = relu(linear(relu(linear(points, tn.conv1)), tn.conv2));
    Tensor<T> g = relu(linear(max_pool(f, 0), tn.fc1));
    x = matmul(points, reshape(linear(g, tn.fc2), 3, 3));
  }
  const auto& enc = model.encoder;
  Tensor<T> h = relu(linear(x, enc[0]));
  Tensor<T> point_feat = relu(linear(h, enc[1]));
  h = relu(linear(point_feat, enc[2]));
  h = relu(linear(h, enc[3]));
  return {point_feat, linear_relu_max(h, enc[4].weight, enc[4].bias)};
}

template <typename T>
Tensor<T> encoder_forward(const Tensor<T>& points, const RefinerModel<T>& model) {
  return encode(points, model).dense();
}

template <typename T>
RotOutput<T> rot_head_forward(const Tensor<T>& f_op, const RefinerModel<T>& model) {
  const ModelHyper& h = model.hyper();
  if (f_op.cols() != h.feature_dim()) {
    throw Error(ErrorKind::kShapeMismatch, "Rot-Head expects " + std::to_string(h.feature_dim()) +
                                               " channels");
  }
  auto branch = [&](const RotBranch<T>& b) { return branch_tail(linear(f_op, b.fc1), b, h); };
  return {branch(model.rot_x), branch(model.rot_y)};
}

template <typename T>
RotOutput<T> rot_head_forward(const Encoded<T>& observed, const Encoded<T>& prior,
                              const RefinerModel<T>& model) {
  const ModelHyper& h = model.hyper();
  // W [pf | g] = W_pf pf + W_g g, with W_g g computed once per cloud.
  const Tensor<T> no_bias = Tensor<T>::constant(Matrix<T>::Zero(1, h.rot_hidden));
  auto branch = [&](const RotBranch<T>& b) {
    const Tensor<T> w_point = slice_cols(b.fc1.weight, 0, h.point_dim);
    const Tensor<T> w_global = slice_cols(b.fc1.weight, h.point_dim, h.global_dim);
    const Tensor<T> g_o = per_point_linear(observed.global, w_global, b.fc1.bias);
    const Tensor<T> g_p = per_point_linear(prior.global, w_global, b.fc1.bias);
    const Tensor<T> h_o = add(per_point_linear(observed.point_feat, w_point, no_bias), g_o);
    const Tensor<T> h_p = add(per_point_linear(prior.point_feat, w_point, no_bias), g_p);
    return branch_tail(concat<T>({h_o, h_p}, 0), b, h);
  };
  return {branch(model.rot_x), branch(model.rot_y)};
}

namespace {

template <typename T>
TsOutput<T> ts_tail(Tensor<T> f, const Tensor<T>& s_init, const RefinerModel<T>& model) {
  if (model.hyper().predict_size) f = concat<T>({f, s_init}, 1);
  Tensor<T> h1 = gelu(linear(f, model.ts_fc1));
  Tensor<T> h2 = gelu(linear(h1, model.ts_fc2));
  TsOutput<T> out;
  out.t_delta = linear(h2, model.t_out);
  if (model.s_out) out.s_delta = linear(h2, *model.s_out);
  return out;
}

}  // namespace

template <typename T>
TsOutput<T> ts_head_forward(const Tensor<T>& f_o, const Tensor<T>& s_init,
                            const RefinerModel<T>& model) {
  if (f_o.cols() != model.hyper().feature_dim()) {
    throw Error(ErrorKind::kShapeMismatch, "TS-Head expects " +
                                               std::to_string(model.hyper().feature_dim()) +
                                               " channels");
  }
  return ts_tail(max_pool(f_o, 0), s_init, model);
}

template <typename T>
TsOutput<T> ts_head_forward(const Encoded<T>& observed, const Tensor<T>& s_init,
                            const RefinerModel<T>& model) {
  // Max over tiled copies of the global feature is the global feature itself.
  return ts_tail(concat<T>({max_pool(observed.point_feat, 0), observed.global}, 1), s_init, model);
}

template <typename T>
Pose9D RefineGraph<T>::estimate(double min_size) const {
  const Eigen::MatrixXd r = r_est.value().template cast<double>();
  Pose9D p;
  p.r = rotation_from_6d(r.col(0), r.col(1));
  p.t = vec3_of(t_est.value().template cast<double>());
  p.s = vec3_of(s_est.value().template cast<double>()).cwiseMax(min_size);
  return p;
}

template <typename T>
RefineGraph<T> forward_refine_graph(const PointCloud& observed, const ShapePrior& prior,
                                    const Pose9D& init, const RefinerModel<T>& model) {
  const ModelHyper& h = model.hyper();
  Pose9D focal_pose = init;
  if (!h.predict_size) focal_pose.s = Vec3::Ones();
  const FocalizedClouds f = focalize(observed, prior.points, focal_pose);

  const Encoded<T> enc_o = encode(Tensor<T>::constant(to_matrix<T>(f.observed)), model);
  const Encoded<T> enc_p = encode(Tensor<T>::constant(to_matrix<T>(f.prior)), model);
  const Tensor<T> s_init = Tensor<T>::constant(row3<T>(init.s));

  RefineGraph<T> g;
  g.rot = rot_head_forward(enc_o, enc_p, model);
  g.ts = ts_head_forward(enc_o, s_init, model);
  g.r_delta = gram_schmidt_6d(g.rot.rx, g.rot.ry);
  g.r_est = matmul(g.r_delta, Tensor<T>::constant(init.r.matrix().cast<T>()));
  g.t_est = add(Tensor<T>::constant(row3<T>(init.t)), g.ts.t_delta);
  g.s_est = h.predict_size ? add(s_init, g.ts.s_delta) : s_init;
  return g;
}

template <typename T>
RefineResult forward_refine(const PointCloud& observed, const ShapePrior& prior,
                            const Pose9D& init, const RefinerModel<T>& model) {
  const RefineGraph<T> g = forward_refine_graph(observed, prior, init, model);
  RefineResult out;
  out.delta.r_delta = rotation_from_6d(vec3_of(g.rot.rx.value().template cast<double>()),
                                       vec3_of(g.rot.ry.value().template cast<double>()));
  out.delta.t_delta = vec3_of(g.ts.t_delta.value().template cast<double>());
  if (g.ts.s_delta.defined()) out.delta.s_delta = vec3_of(g.ts.s_delta.value().template cast<double>());
  out.est = compose_pose(init, out.delta);
  return out;
}

#define CATRE_INSTANTIATE(T)                                                                   \
  template class RefinerModel<T>;                                                              \
  template struct Encoded<T>;                                                                  \
  template struct RefineGraph<T>;                                                              \
  template Encoded<T> encode(const Tensor<T>&, const RefinerModel<T>&);                        \
  template Tensor<T> encoder_forward(const Tensor<T>&, const RefinerModel<T>&);                \
  template RotOutput<T> rot_head_forward(const Tensor<T>&, const RefinerModel<T>&);            \
  template RotOutput<T> rot_head_forward(const Encoded<T>&, const Encoded<T>&,                 \
                                         const RefinerModel<T>&);                              \
  template TsOutput<T> ts_head_forward(const Tensor<T>&, const Tensor<T>&,                     \
                                       const RefinerModel<T>&);                                \
  template TsOutput<T> ts_head_forward(const Encoded<T>&, const Tensor<T>&,                    \
                                       const RefinerModel<T>&);                                \
  template RefineGraph<T> forward_refine_graph(const PointCloud&, const ShapePrior&,           \
                                               const Pose9D&, const RefinerModel<T>&);         \
  template RefineResult forward_refine(const PointCloud&, const ShapePrior&, const Pose9D&,    \
                                       const RefinerModel<T>&);

CATRE_INSTANTIATE(float)
CATRE_INSTANTIATE(double)
#undef CATRE_INSTANTIATE

template RefinerModel<double> RefinerModel<float>::cast<double>() const;
template RefinerModel<float> RefinerModel<double>::cast<float>() const;

}  // namespace catre::autonet
