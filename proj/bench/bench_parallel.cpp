// Serial reference vs OpenMP paths for the two parallel kernels.
#include <benchmark/benchmark.h>

#include "heavytail/crossing_estimator.hpp"
#include "heavytail/harness.hpp"
#include "heavytail/ld_estimator.hpp"

using namespace heavytail;

namespace {

const LdEstimator& ld() {
    static const LdEstimator e(LdProblem{IncrementModel::product_lambda_laplace(4.0), 100, 100.0});
    return e;
}

const CrossingProblem& queue_problem() {
    static const IncrementModel m = IncrementModel::queue(2.5, 0.5);
    static const CrossingProblem p{m, m.queue_drift(), 1000.0, BlockScheme(2)};
    return p;
}

void BM_ReplicationsSerial(benchmark::State& state) {
    (void)ld();  // build the twisted table outside the timed loop
    const Replication rep = [](std::uint64_t, RngStream& rng) { return ld().sample(rng); };
    for (auto _ : state) benchmark::DoNotOptimize(run_serial(rep, static_cast<std::uint64_t>(state.range(0)), 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ReplicationsParallel(benchmark::State& state) {
    (void)ld();  // build the twisted table outside the timed loop
    const Replication rep = [](std::uint64_t, RngStream& rng) { return ld().sample(rng); };
    for (auto _ : state) benchmark::DoNotOptimize(run(rep, static_cast<std::uint64_t>(state.range(0)), 0, 1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_JumpTableSerial(benchmark::State& state) {
    for (auto _ : state) {
        JumpIndexTable t(queue_problem(), static_cast<int>(state.range(0)), false);
        benchmark::DoNotOptimize(t.total());
    }
}

void BM_JumpTableParallel(benchmark::State& state) {
    for (auto _ : state) {
        JumpIndexTable t(queue_problem(), static_cast<int>(state.range(0)), true);
        benchmark::DoNotOptimize(t.total());
    }
}

void BM_JumpSumTwoPass(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(q_k(queue_problem(), static_cast<int>(state.range(0))));
}

} // namespace

BENCHMARK(BM_ReplicationsSerial)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicationsParallel)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JumpTableSerial)->Arg(16)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JumpTableParallel)->Arg(16)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JumpSumTwoPass)->Arg(16)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
