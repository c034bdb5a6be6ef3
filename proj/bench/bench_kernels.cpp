// Serial reference vs OpenMP kernels. Arg 0 is the backend (0 serial, 1 parallel).

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "ril/invariance.hpp"
#include "ril/kernels.hpp"
#include "ril/rng.hpp"

using namespace ril;

namespace {

Backend backend_of(const benchmark::State& st) { return st.range(0) ? Backend::Parallel : Backend::Serial; }

Table3 random_tau(std::size_t n, std::size_t k, Rng& rng) {
    Table3 tau(n, k);
    for (StateId s = 0; s < n; ++s)
        for (ActionId a = 0; a < k; ++a) {
            auto row = tau.row(s, a);
            double total = 0.0;
            for (double& x : row) total += x = rng.uniform();
            for (double& x : row) x /= total;
        }
    return tau;
}

Table2 random_table2(std::size_t n, std::size_t k, Rng& rng) {
    Table2 t(n, k);
    for (double& x : t.flat()) x = rng.uniform(-1.0, 1.0);
    return t;
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

void BM_bellman_backup(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(1));
    Rng rng(1);
    const Table3 tau = random_tau(n, 8, rng);
    const Table2 rbar = random_table2(n, 8, rng);
    const auto v = random_vec(n, rng);
    Table2 q(n, 8);
    for (auto _ : st) {
        bellman_backup(backend_of(st), tau, rbar, 0.9, v, q);
        benchmark::DoNotOptimize(q.flat().data());
    }
}

void BM_soft_value(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(1));
    Rng rng(2);
    const Table2 q = random_table2(n, 16, rng);
    std::vector<double> v(n);
    for (auto _ : st) {
        soft_value(backend_of(st), q, 1.0, v);
        benchmark::DoNotOptimize(v.data());
    }
}

void BM_pairwise_logistic(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(1));
    Rng rng(3);
    const auto g = random_vec(n, rng);
    std::vector<double> out(triangle_size(n));
    for (auto _ : st) {
        pairwise_logistic(backend_of(st), g, 1.0, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_pairwise_order(benchmark::State& st) {
    const auto n = static_cast<std::size_t>(st.range(1));
    Rng rng(4);
    const auto g = random_vec(n, rng);
    std::vector<std::uint8_t> out(triangle_size(n));
    for (auto _ : st) {
        pairwise_order(backend_of(st), g, 1e-9, out);
        benchmark::DoNotOptimize(out.data());
    }
}

// One table cell end to end: trial fan-out over sampled MDPs.
void BM_check_invariance(benchmark::State& st) {
    ExperimentParams p;
    p.backend = backend_of(st);
    for (auto _ : st) {
        const auto v = check_invariance(ObjectKind::BoltzmannCmpTrajectories, TransformClass::KInitialShaping, p,
                                        static_cast<std::size_t>(st.range(1)));
        benchmark::DoNotOptimize(v.trials_run);
    }
}

} // namespace

BENCHMARK(BM_bellman_backup)->ArgsProduct({{0, 1}, {64, 512}});
BENCHMARK(BM_soft_value)->ArgsProduct({{0, 1}, {1024, 65536}});
BENCHMARK(BM_pairwise_logistic)->ArgsProduct({{0, 1}, {256, 2048}});
BENCHMARK(BM_pairwise_order)->ArgsProduct({{0, 1}, {256, 2048}});
BENCHMARK(BM_check_invariance)->ArgsProduct({{0, 1}, {100}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
