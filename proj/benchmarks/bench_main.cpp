#include <benchmark/benchmark.h>

#include "rsc/automata.hpp"
#include "rsc/cluster.hpp"
#include "rsc/construct.hpp"
#include "rsc/prng.hpp"

namespace {

rsc::Points blob_points(int n, int dim, std::uint64_t seed) {
    rsc::SplitMix64 rng(seed);
    rsc::Points p(n, dim);
    for (int i = 0; i < n; ++i) {
        int c = i % 8;
        for (int j = 0; j < dim; ++j) p(i, j) = 3.0 * ((c >> (j % 3)) & 1) + 0.2 * rng.gaussian();
    }
    return p;
}

void bm_kmeans(benchmark::State& state) {
    auto p = blob_points(static_cast<int>(state.range(0)), 8, 1);
    for (auto _ : state) {
        auto a = rsc::kmeans(p, 8, 7);
        benchmark::DoNotOptimize(a.labels.data());
    }
}
BENCHMARK(bm_kmeans)->Arg(500)->Arg(2000);

void bm_dbscan(benchmark::State& state) {
    auto p = blob_points(static_cast<int>(state.range(0)), 8, 2);
    for (auto _ : state) {
        auto a = rsc::dbscan(p, 0.5);
        benchmark::DoNotOptimize(a.labels.data());
    }
}
BENCHMARK(bm_dbscan)->Arg(500)->Arg(2000);

void bm_rnn_forward(benchmark::State& state) {
    auto dfa = rsc::tomita5();
    rsc::ConstructionParams params{2.0, 2.0, 0.0};
    auto model = rsc::encode_dfa(dfa, params);
    auto h0 = rsc::initial_hidden(model, dfa, params);
    rsc::SplitMix64 rng(3);
    rsc::Word w(static_cast<std::size_t>(state.range(0)));
    for (int& s : w) s = static_cast<int>(rng.below(2));
    for (auto _ : state) {
        auto fr = rsc::forward(model, w, h0);
        benchmark::DoNotOptimize(fr.class_probs.data());
    }
}
BENCHMARK(bm_rnn_forward)->Arg(25)->Arg(200);

void bm_minimize(benchmark::State& state) {
    auto m = rsc::generate_random(rsc::MachineKind::Dfa, static_cast<int>(state.range(0)), 2, 0, 5);
    for (auto _ : state) {
        auto mm = rsc::minimize(m);
        benchmark::DoNotOptimize(mm.num_states);
    }
}
BENCHMARK(bm_minimize)->Arg(16)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
