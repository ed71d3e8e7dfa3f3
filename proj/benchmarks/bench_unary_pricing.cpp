#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "unary_pricing/amplitude_estimation.hpp"
#include "unary_pricing/gan.hpp"
#include "unary_pricing/market_model.hpp"
#include "unary_pricing/unary_circuit.hpp"

using namespace unary_pricing;

static void BM_BuildQ(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dist = discretize(BsmParams{}, n);
  for (auto _ : state) {
    const auto loader = build_loader(fit_loader(dist), n);
    const auto payoff = build_payoff(payoff_angles(dist, 1.0));
    benchmark::DoNotOptimize(build_q(loader, payoff, n));
  }
}
BENCHMARK(BM_BuildQ)->Arg(8)->Arg(16)->Arg(64);

static void BM_ApplyQ(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PricingCircuit circuit(discretize(BsmParams{}, n), 1.0);
  UnaryState s = circuit.prepare(0);
  for (auto _ : state) {
    s = circuit.q().apply(s);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_ApplyQ)->Arg(8)->Arg(16)->Arg(64);

static void BM_RecoverAngle(benchmark::State& state) {
  const auto max_m = static_cast<std::uint32_t>(state.range(0));
  std::vector<Observation> obs;
  for (std::uint32_t m = 0; m <= max_m; ++m) {
    const double p = std::pow(std::sin((2.0 * m + 1.0) * 0.4), 2);
    obs.push_back({m, std::round(5000 * p), 5000});
  }
  for (auto _ : state) benchmark::DoNotOptimize(recover_angle(obs));
}
BENCHMARK(BM_RecoverAngle)->Arg(5)->Arg(20)->Arg(50);

static void BM_EstimatePayoff(benchmark::State& state) {
  const auto dist = discretize(BsmParams{}, 8);
  const auto schedule = AESchedule::linear(static_cast<std::uint32_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_payoff(dist, 1.0, schedule, 0));
}
BENCHMARK(BM_EstimatePayoff)->Arg(10)->Arg(50);

static void BM_McPrice(benchmark::State& state) {
  const auto paths = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(mc_price(BsmParams{}, paths, 0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(paths));
}
BENCHMARK(BM_McPrice)->Arg(100'000)->Arg(1'000'000);

static void BM_CriticGradient(benchmark::State& state) {
  const auto net = CriticNet::random({8, 32, 16, 1}, 0.1, 0);
  const Batch real(30, normal_target(8));
  const Batch fake(30, Distribution(8, 0.125));
  for (auto _ : state) benchmark::DoNotOptimize(net.objective_gradient(real, fake));
}
BENCHMARK(BM_CriticGradient);

static void BM_TrainGan(benchmark::State& state) {
  TrainConfig config;
  config.generations = static_cast<std::size_t>(state.range(0));
  const auto target = normal_target(8);
  for (auto _ : state) benchmark::DoNotOptimize(train_gan(target, config));
}
BENCHMARK(BM_TrainGan)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
