#include <benchmark/benchmark.h>

#include "cvrpdiff/oracles.hpp"
#include "cvrpdiff/pipeline.hpp"

namespace {

using namespace cvrpdiff;

ModelConfig desk_model() {
  ModelConfig c;
  c.d = 32;
  c.heads = 4;
  c.gat_layers = 3;
  c.denoiser_layers = 3;
  c.encoder_layers = 3;
  return c;
}

void BM_BruteForce(benchmark::State& state) {
  const auto inst = generate_instance(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_solve(inst));
}
BENCHMARK(BM_BruteForce)->DenseRange(6, 12, 2)->Unit(benchmark::kMillisecond);

void BM_Savings(benchmark::State& state) {
  const auto inst = generate_instance(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(savings_solve(inst));
}
BENCHMARK(BM_Savings)->Arg(20)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_DenoiserForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto inst = generate_instance(n, 3);
  const auto config = desk_model();
  const GatParams gat(config, 1);
  const DenoiserParams den(config, 2);
  const auto schedule = make_schedule(200, 1e-4, 2e-2);
  const Matrix h0 = gat_forward(node_features(inst), gat);
  const auto xt = sample_xt(from_solution(inst, savings_solve(inst)), 100, schedule, 5);
  for (auto _ : state) benchmark::DoNotOptimize(predict_x0(inst, h0, xt, 100, den));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_DenoiserForward)->Arg(10)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_GreedyRollout(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto inst = generate_instance(n, 4);
  const auto config = desk_model();
  const GatParams gat(config, 1);
  const MaskedEncoderParams encoder(config, 2);
  const DecoderParams decoder(config, 3);
  const auto mask = from_solution(inst, savings_solve(inst));
  const auto enc = encode(inst, mask, gat, encoder);
  for (auto _ : state) benchmark::DoNotOptimize(rollout(inst, enc, mask, decoder, 1, DecodeMode::greedy, 0));
}
BENCHMARK(BM_GreedyRollout)->Arg(10)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& state) {
  Models m;
  m.config.model = desk_model();
  m.config.diffusion.T = 200;
  m.diffusion = DiffusionModels(m.config, 1);
  m.policy = PolicyModels(m.config.model, 2);
  const auto inst = generate_instance(20, 5);
  SolveOptions o;
  o.augmentations = static_cast<int>(state.range(0));
  o.inference_steps = 25;
  for (auto _ : state) benchmark::DoNotOptimize(solve(inst, m, o));
}
BENCHMARK(BM_Solve)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
