#include <benchmark/benchmark.h>

#include "moatplus/event_json.hpp"
#include "moatplus/pipeline.hpp"
#include "moatplus/scoring.hpp"
#include "moatplus/synthetic.hpp"

using namespace moatplus;

namespace {

// One small trained bundle shared by the scoring benchmarks.
struct BenchState {
    Catalog catalog;
    ModelBundle bundle;
    std::vector<std::string> lines;

    BenchState() {
        GeneratorConfig gen;
        gen.n_items = 8000;
        gen.seed = 4242;
        catalog = generate_catalog(gen);
        inject_anomalies(catalog.events, catalog.truths, gen);
        TrainConfig cfg;
        cfg.seed = 4243;
        cfg.aggregator.forest.n_trees = 100;
        cfg.threads = 2;
        auto [trained, report] = train_bundle(catalog.events, catalog.truths, cfg);
        bundle = std::move(trained);
        for (int i = 0; i < 512; ++i) lines.push_back(serialize_event(catalog.events[i]));
    }
};

BenchState& state() {
    static BenchState s;
    return s;
}

void BM_ParseEvent(benchmark::State& bm) {
    auto& s = state();
    std::size_t i = 0;
    for (auto _ : bm) {
        benchmark::DoNotOptimize(parse_event(s.lines[i++ % s.lines.size()]));
    }
}
BENCHMARK(BM_ParseEvent);

void BM_ComputeFeatures(benchmark::State& bm) {
    auto& s = state();
    std::size_t i = 0;
    for (auto _ : bm) {
        const auto& e = s.catalog.events[i++ % 512];
        benchmark::DoNotOptimize(
            compute_features(e, s.bundle.standardization, s.bundle.feature_config));
    }
}
BENCHMARK(BM_ComputeFeatures);

void BM_Score(benchmark::State& bm) {
    auto& s = state();
    std::size_t i = 0;
    for (auto _ : bm) {
        benchmark::DoNotOptimize(score(s.catalog.events[i++ % 512], s.bundle));
    }
}
BENCHMARK(BM_Score);

void BM_ForestPredict(benchmark::State& bm) {
    auto& s = state();
    const auto& e = s.catalog.events[0];
    const auto bundle =
        compute_features(e, s.bundle.standardization, s.bundle.feature_config);
    const auto row = aggregator_features(e, bundle);
    for (auto _ : bm) {
        benchmark::DoNotOptimize(s.bundle.aggregator.forest.predict_proba(row));
    }
}
BENCHMARK(BM_ForestPredict);

void BM_KdeDensity(benchmark::State& bm) {
    const std::vector<double> samples{-0.2, 0.1, 0.4, 1.2, 2.5};
    double q = 0.0;
    for (auto _ : bm) {
        benchmark::DoNotOptimize(kde_density(samples, q, 0.5));
        q += 1e-6;
    }
}
BENCHMARK(BM_KdeDensity);

}  // namespace

BENCHMARK_MAIN();
