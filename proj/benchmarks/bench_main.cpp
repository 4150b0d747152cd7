#include <random>

#include <benchmark/benchmark.h>

#include "icumort/metrics.hpp"
#include "icumort/mlp.hpp"
#include "icumort/shapley.hpp"
#include "icumort/smote.hpp"
#include "icumort/synth.hpp"
#include "icumort/tree.hpp"

using namespace icumort;

namespace {

Matrix normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = z(rng);
    return m;
}

std::vector<int> coin_labels(std::size_t n, double p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution b(p);
    std::vector<int> y(n);
    for (auto& v : y) v = b(rng);
    return y;
}

} // namespace

static void BM_Auroc(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto s = normal_matrix(n, 1, 1);
    const auto y = coin_labels(n, 0.2, 2);
    for (auto _ : state) benchmark::DoNotOptimize(auroc(s.values(), y));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auroc)->Arg(523)->Arg(10000)->Arg(100000);

static void BM_BootstrapCi(benchmark::State& state) {
    const auto s = normal_matrix(523, 1, 3);
    const auto y = coin_labels(523, 0.2, 4);
    for (auto _ : state) benchmark::DoNotOptimize(bootstrap_ci(s.values(), y, state.range(0), 0.95, 5));
}
BENCHMARK(BM_BootstrapCi)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_MlpTrainStep(benchmark::State& state) {
    MlpModel m(MlpArchitecture{}, 1);
    const auto x = normal_matrix(32, 30, 6);
    const auto y = coin_labels(32, 0.5, 7);
    Rng rng(8);
    for (auto _ : state) benchmark::DoNotOptimize(m.train_step(x, y, {0.01, 0.9}, rng));
}
BENCHMARK(BM_MlpTrainStep);

static void BM_MlpPredict(benchmark::State& state) {
    const MlpModel m(MlpArchitecture{}, 1);
    const auto x = normal_matrix(static_cast<std::size_t>(state.range(0)), 30, 9);
    for (auto _ : state) benchmark::DoNotOptimize(m.predict_proba(x));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpPredict)->Arg(523)->Arg(8192);

static void BM_BestSplit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = normal_matrix(n, 50, 10);
    const auto g = normal_matrix(n, 1, 11);
    std::vector<double> h(n, 0.25);
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    for (auto _ : state) benchmark::DoNotOptimize(find_best_split(x, g.values(), h, rows, 1.0, 0.0));
}
BENCHMARK(BM_BestSplit)->Arg(512)->Arg(2441)->Unit(benchmark::kMicrosecond);

static void BM_Smote(benchmark::State& state) {
    const auto x = normal_matrix(2440, 30, 12);
    std::vector<ColumnMeta> cols;
    for (std::size_t j = 0; j < 30; ++j) cols.push_back({"f" + std::to_string(j), ColumnKind::numeric, 0});
    std::vector<int> y(2440, 0);
    for (std::size_t i = 1935; i < 2440; ++i) y[i] = 1;
    const Dataset ds(cols, x, y);
    for (auto _ : state) benchmark::DoNotOptimize(smote(ds, {5, 1.0, 13}));
}
BENCHMARK(BM_Smote)->Unit(benchmark::kMillisecond);

static void BM_KernelShap(benchmark::State& state) {
    const MlpModel m(MlpArchitecture{}, 1);
    const auto bg = normal_matrix(100, 30, 14);
    const auto x = normal_matrix(1, 30, 15);
    const PredictFn f = [&](const Matrix& rows) { return m.predict_proba(rows); };
    for (auto _ : state) benchmark::DoNotOptimize(kernel_shap(f, bg, x.row(0), state.range(0), 16));
}
BENCHMARK(BM_KernelShap)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_SynthCohort(benchmark::State& state) {
    auto spec = paper_shape_spec(1);
    spec.bayes_draws = 100000;
    for (auto _ : state) benchmark::DoNotOptimize(generate_cohort(spec));
}
BENCHMARK(BM_SynthCohort)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
