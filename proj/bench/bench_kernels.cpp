// Serial reference vs OpenMP path for the grid kernels.
#include <benchmark/benchmark.h>

#include "stq/cli.hpp"
#include "stq/cz.hpp"
#include "stq/rb.hpp"
#include "stq/statics.hpp"

namespace {

const stq::DeviceSpec& device() {
    static const stq::DeviceSpec d = stq::load_device_file(stq::paper_like_config_path());
    return d;
}

stq::Execution policy_of(const benchmark::State& state) {
    return state.range(0) == 0 ? stq::Execution::serial : stq::Execution::parallel;
}

void BM_ZZScan(benchmark::State& state) {
    const auto grid = stq::parse_grid("0:0.45:0.01");
    for (auto _ : state) {
        benchmark::DoNotOptimize(stq::zz_scan(device(), {"Q3", "Q7"}, grid, policy_of(state)));
    }
}
BENCHMARK(BM_ZZScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Chevron(benchmark::State& state) {
    const stq::QubitPair pair{"Q3", "Q7"};
    const double flux = stq::cz_coupler_flux(device(), pair);
    const auto detunings = stq::parse_grid("-4:4:1");
    const auto times = stq::parse_grid("0:300:10");
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            stq::chevron_scan(device(), pair, detunings, times, flux, {std::nullopt, policy_of(state)}));
    }
}
BENCHMARK(BM_Chevron)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TwoQubitRB(benchmark::State& state) {
    stq::GateSet gates;
    gates.qubits = 2;
    gates.clifford_noise = stq::depolarizing(2, 0.99);
    stq::RBOptions options;
    options.bootstrap_resamples = 0;
    options.policy = policy_of(state);
    for (auto _ : state) {
        benchmark::DoNotOptimize(stq::run_rb(gates, options));
    }
}
BENCHMARK(BM_TwoQubitRB)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
