// Serial reference vs OpenMP replication kernel on the multichannel example.

#include <benchmark/benchmark.h>

#include <cmath>
#include <omp.h>

#include "qcd/sim.hpp"

namespace {

struct Fixture {
    qcd::MultichannelGaussianModel model{{0.5, 0.5, 1, 1, 1, 1, 1, 1, 1, 1}, {{0}, {1}, {2}, {3}, {4}, {5}, {6}, {7}, {8}, {9}, {0, 1, 2}}};
    qcd::DivergenceTables tables{model};
    qcd::ReplicationTask task = make_task();

    qcd::ReplicationTask make_task() const {
        const qcd::ParamId theta = model.find_param({0, 1, 2});
        const qcd::PolicySpec policy = qcd::WccPolicy{qcd::ExplorationSchedule::block_tail(10, 1)};
        return {qcd::Scenario{theta, 1, 1'000'000}, policy, qcd::make_detector(policy, std::log(1e4)), 7, {}};
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

void BM_Serial(benchmark::State& state) {
    auto& f = fixture();
    const qcd::SimContext ctx{f.model, f.tables};
    for (auto _ : state) {
        auto records = qcd::run_replications_serial(ctx, f.task, static_cast<std::uint64_t>(state.range(0)));
        benchmark::DoNotOptimize(records.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Parallel(benchmark::State& state) {
    auto& f = fixture();
    const qcd::SimContext ctx{f.model, f.tables};
    const int workers = omp_get_max_threads();
    for (auto _ : state) {
        auto records = qcd::run_replications(ctx, f.task, static_cast<std::uint64_t>(state.range(0)), workers);
        benchmark::DoNotOptimize(records.data());
    }
    state.counters["workers"] = workers;
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Serial)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)->Arg(256)->Arg(2048)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
