#include <benchmark/benchmark.h>

#include "catre/eval.hpp"
#include "catre/priors.hpp"
#include "catre/synthdata.hpp"
#include "catre/train.hpp"

using namespace catre;
using namespace catre::autonet;

namespace {

Matrix<float> rand_f(Index r, Index c) { return Matrix<float>::Random(r, c); }

void BM_Matmul(benchmark::State& st) {
  const Index n = st.range(0);
  const auto a = Tensor<float>::constant(rand_f(n, 128)), b = Tensor<float>::constant(rand_f(128, 128));
  for (auto _ : st) benchmark::DoNotOptimize(matmul(a, b).value().data());
  st.SetItemsProcessed(st.iterations() * n);
}
BENCHMARK(BM_Matmul)->Arg(256)->Arg(2048);

void BM_GroupNorm(benchmark::State& st) {
  const Index n = st.range(0);
  const auto x = Tensor<float>::constant(rand_f(n, 128));
  const auto g = Tensor<float>::constant(Matrix<float>::Ones(1, 128));
  const auto b = Tensor<float>::constant(Matrix<float>::Zero(1, 128));
  for (auto _ : st) benchmark::DoNotOptimize(group_norm(x, g, b, 8).value().data());
  st.SetItemsProcessed(st.iterations() * n);
}
BENCHMARK(BM_GroupNorm)->Arg(256)->Arg(2048);

void BM_LinearReluMax(benchmark::State& st) {
  const Index n = st.range(0);
  const auto x = Tensor<float>::constant(rand_f(n, 128));
  const auto w = Tensor<float>::constant(rand_f(1024, 128)), b = Tensor<float>::constant(rand_f(1, 1024));
  for (auto _ : st) benchmark::DoNotOptimize(linear_relu_max(x, w, b).value().data());
  st.SetItemsProcessed(st.iterations() * n);
}
BENCHMARK(BM_LinearReluMax)->Arg(256)->Arg(1024);

// forward + backward through one op chain, to see the tape overhead
void BM_MlpBackward(benchmark::State& st) {
  const auto x = Tensor<float>::constant(rand_f(512, 64));
  auto w = Tensor<float>::parameter(rand_f(64, 64));
  for (auto _ : st) {
    w.zero_grad();
    mean(relu(matmul(x, w))).backward();
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_MlpBackward);

void BM_Encoder(benchmark::State& st) {
  ModelHyper h;
  h.n_o = h.n_p = static_cast<int>(st.range(0));
  const RefinerModel<float> m(h, 1);
  const auto pts = Tensor<float>::constant(rand_f(h.n_o, 3) * 0.5f);
  for (auto _ : st) benchmark::DoNotOptimize(encode(pts, m).global.value().data());
}
BENCHMARK(BM_Encoder)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_ForwardRefine(benchmark::State& st) {
  ModelHyper h;
  h.n_o = h.n_p = static_cast<int>(st.range(0));
  const RefinerModel<float> m(h, 1);
  const auto& cat = find_category("mug");
  const SceneSample s = make_scene(cat, SceneConfig{}, 1, 0);
  const ShapePrior prior = mean_shape(cat, h.n_p);
  Rng rng(2);
  const PointCloud obs = ball_sample(s.observed, s.init, h.n_o, rng);
  for (auto _ : st) benchmark::DoNotOptimize(forward_refine(obs, prior, s.init, m).est.t.data());
}
BENCHMARK(BM_ForwardRefine)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& st) {
  ModelHyper h;
  h.n_o = h.n_p = 256;
  const RefinerModel<float> m(h, 1);
  const auto& cat = find_category("laptop");
  const SceneSample s = make_scene(cat, SceneConfig{}, 1, 0);
  const ShapePrior prior = mean_shape(cat, h.n_p);
  Rng rng(3);
  const PointCloud obs = ball_sample(s.observed, s.init, h.n_o, rng);
  for (auto _ : st) {
    sample_loss(m, obs, prior, s.init, s.gt, cat.symmetry).total.backward();
    benchmark::DoNotOptimize(m.t_out.weight.grad().data());
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Fps(benchmark::State& st) {
  const PointCloud pts = PointCloud::Random(st.range(0), 3);
  for (auto _ : st) benchmark::DoNotOptimize(fps_indices(pts, 256).data());
}
BENCHMARK(BM_Fps)->Arg(2048)->Arg(8192);

void BM_Iou3d(benchmark::State& st) {
  Pose9D a, b;
  a.s = Vec3(0.2, 0.3, 0.1);
  b = a;
  b.t = Vec3(0.03, 0.01, 0.0);
  b.r = Rotation::from_axis_angle(Vec3::UnitZ(), 0.2);
  const int n = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(iou3d(a, b, SymmetrySpec::none(), n));
}
BENCHMARK(BM_Iou3d)->Arg(10000)->Arg(100000);

void BM_MakeScene(benchmark::State& st) {
  const auto& cat = find_category("bowl");
  std::uint64_t i = 0;
  for (auto _ : st) benchmark::DoNotOptimize(make_scene(cat, SceneConfig{}, 1, i++).observed.data());
}
BENCHMARK(BM_MakeScene)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
