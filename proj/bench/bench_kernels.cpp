#include <random>

#include <benchmark/benchmark.h>

#include "ic/codetext.hpp"
#include "ic/kernels.hpp"
#include "ic/metrics.hpp"

namespace {

std::vector<ic::TokenBag> random_bags(std::size_t n, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> vocab(0, 400);
    std::uniform_int_distribution<int> length(5, 60);
    std::vector<ic::TokenBag> bags;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> tokens;
        const int len = length(rng);
        for (int t = 0; t < len; ++t) tokens.push_back("tok" + std::to_string(vocab(rng)));
        bags.emplace_back(std::move(tokens));
    }
    return bags;
}

void BM_Jaccard(benchmark::State& state, bool parallel) {
    std::mt19937_64 rng(7);
    const auto bags = random_bags(static_cast<std::size_t>(state.range(0)), rng);
    const auto target = random_bags(1, rng).front();
    for (auto _ : state) {
        auto scores = parallel ? ic::kernels::jaccard_scores(target, bags)
                               : ic::kernels::jaccard_scores_serial(target, bags);
        benchmark::DoNotOptimize(scores);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Cosine(benchmark::State& state, bool parallel) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> gauss;
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::vector<std::vector<double>> rows(n, std::vector<double>(768));
    for (auto& r : rows) {
        for (auto& x : r) x = gauss(rng);
    }
    std::vector<double> target(768);
    for (auto& x : target) x = gauss(rng);
    for (auto _ : state) {
        auto scores = parallel ? ic::kernels::cosine_scores(target, rows)
                               : ic::kernels::cosine_scores_serial(target, rows);
        benchmark::DoNotOptimize(scores);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_StatementScores(benchmark::State& state, bool parallel) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unit;
    const std::size_t k = 64;
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::size_t l = 40;
    ic::Matrix slice(k, n);
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < n; ++c) slice(r, c) = unit(rng);
    }
    std::vector<std::size_t> map(n);
    for (std::size_t c = 0; c < n; ++c) map[c] = c * l / n;
    for (auto _ : state) {
        auto scores = parallel ? ic::kernels::statement_scores(slice, map, l)
                               : ic::kernels::statement_scores_serial(slice, map, l);
        benchmark::DoNotOptimize(scores);
    }
}

void BM_ScoreBatch(benchmark::State& state, bool parallel) {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> vocab(0, 60);
    std::vector<ic::metrics::TextPair> pairs;
    for (int i = 0; i < state.range(0); ++i) {
        std::string a, b;
        for (int t = 0; t < 14; ++t) a += "word" + std::to_string(vocab(rng)) + " ";
        for (int t = 0; t < 12; ++t) b += "word" + std::to_string(vocab(rng)) + " ";
        pairs.push_back({a, b});
    }
    for (auto _ : state) {
        auto scores = parallel ? ic::metrics::score_batch(pairs) : ic::metrics::score_batch_serial(pairs);
        benchmark::DoNotOptimize(scores);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Jaccard, serial, false)->Arg(1000)->Arg(50000);
BENCHMARK_CAPTURE(BM_Jaccard, openmp, true)->Arg(1000)->Arg(50000);
BENCHMARK_CAPTURE(BM_Cosine, serial, false)->Arg(1000)->Arg(20000);
BENCHMARK_CAPTURE(BM_Cosine, openmp, true)->Arg(1000)->Arg(20000);
BENCHMARK_CAPTURE(BM_StatementScores, serial, false)->Arg(512)->Arg(8192);
BENCHMARK_CAPTURE(BM_StatementScores, openmp, true)->Arg(512)->Arg(8192);
BENCHMARK_CAPTURE(BM_ScoreBatch, serial, false)->Arg(2000);
BENCHMARK_CAPTURE(BM_ScoreBatch, openmp, true)->Arg(2000);

BENCHMARK_MAIN();
