#include <benchmark/benchmark.h>

#include "agvsched/experiment.hpp"
#include "agvsched/netsim.hpp"

using namespace agvsched;

namespace {

const ChannelConfig kChannel{60, 2, 2, 0.0, TrafficPattern::bernoulli};

void BM_ChannelSerial(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_channel_serial(static_cast<int>(state.range(0)), kChannel, 200000, 1));
}
void BM_ChannelParallel(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_channel_parallel(static_cast<int>(state.range(0)), kChannel, 200000, 1));
}
void BM_ChannelReference(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(
        detail::estimate_channel_reference(static_cast<int>(state.range(0)), kChannel, 200000, 1));
}

SweepSpec small_sweep() {
  SweepSpec s;
  s.base = Json::parse(R"({"agvs": {"count": 8}, "tasks": {"lines": 6, "per_line": 2, "waves": 1},
                           "mode": "comm_realistic", "channel": {"D": 2}})");
  s.axis = "agvs.count";
  s.values = {4, 8};
  s.replications = 4;
  return s;
}

void BM_SweepSerial(benchmark::State& state) {
  const SweepSpec s = small_sweep();
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep_serial(s));
}
void BM_SweepParallel(benchmark::State& state) {
  const SweepSpec s = small_sweep();
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep_parallel(s));
}

}  // namespace

BENCHMARK(BM_ChannelReference)->Arg(10)->Arg(72)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChannelSerial)->Arg(10)->Arg(72)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChannelParallel)->Arg(10)->Arg(72)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
