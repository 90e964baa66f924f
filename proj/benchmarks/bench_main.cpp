#include <benchmark/benchmark.h>

#include <array>

#include "sp2net/bartlett.hpp"
#include "sp2net/inference.hpp"
#include "sp2net/neural_net.hpp"
#include "sp2net/rng.hpp"
#include "sp2net/scenario.hpp"
#include "sp2net/sparse_bpdn.hpp"

namespace {

using namespace sp2net;

ComplexVector two_source_snapshot(const ArrayGeometry& geom, double sigma_v) {
  Rng rng(1);
  const std::vector<Source> src{{100.0, {1.0, 0.0}}, {105.0, {0.0, 0.8}}};
  return synthesize_snapshot(geom, src, sigma_v, rng);
}

void BM_BartlettScan(benchmark::State& state) {
  const auto geom = make_ula(16);
  const auto grid = AngleGrid::uniform(45, 135, 0.01 * static_cast<double>(state.range(0)));
  const auto x = two_source_snapshot(geom, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(bartlett_spectrum(geom, x, grid));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}
BENCHMARK(BM_BartlettScan)->Arg(1)->Arg(10)->Unit(benchmark::kMicrosecond);

void BM_SparseSolve(benchmark::State& state) {
  const auto geom = make_ula(16);
  const auto grid = AngleGrid::uniform(45, 135, 0.01 * static_cast<double>(state.range(0)));
  const BpdnSolver solver(build_manifold_matrix(geom, grid.angles()));
  const double sigma_v = 0.1;
  const auto x = two_source_snapshot(geom, sigma_v);
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(x, sigma_v));
}
BENCHMARK(BM_SparseSolve)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ForwardBatch(benchmark::State& state) {
  Rng rng(3);
  const auto model = initialize_model(16, default_architecture(16), rng);
  Matrix inputs = Matrix::Random(static_cast<Eigen::Index>(model.input_width()), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(model, inputs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_TrainingStep(benchmark::State& state) {
  Rng rng(4);
  const std::array<std::uint32_t, 2> hidden{256, 256};
  const auto arch = make_architecture(16, hidden, {});
  auto model = initialize_model(16, arch, rng);
  const Eigen::Index n = state.range(0);
  Matrix inputs = Matrix::Random(static_cast<Eigen::Index>(model.input_width()), n);
  const std::vector<double> targets(static_cast<std::size_t>(n), 0.3);
  const std::vector<double> weights(static_cast<std::size_t>(n), 1.0);
  auto adam = AdamState::for_model(model, 1e-4);
  for (auto _ : state) {
    auto grad = Gradients::zeros_like(model);
    accumulate_gradients(model, inputs, targets, weights, grad);
    adam_step(model, adam, grad);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_TrainingStep)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_NetSpectrum(benchmark::State& state) {
  Rng rng(5);
  const std::array<std::uint32_t, 2> hidden{256, 256};
  const auto model = initialize_model(16, make_architecture(16, hidden, {}), rng);
  const auto geom = make_ula(16);
  const auto grid = AngleGrid::uniform(45, 135, 0.1);
  const auto x = two_source_snapshot(geom, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(net_spectrum(model, geom, x, 0.1, grid));
}
BENCHMARK(BM_NetSpectrum)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
