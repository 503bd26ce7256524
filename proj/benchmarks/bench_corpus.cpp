#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "coc/corpus.hpp"

namespace {

std::string prose(std::size_t words, std::uint64_t seed) {
    static const char* vocab[] = {"mill", "river", "gate", "cart", "barley", "ledger", "north", "shed"};
    std::mt19937_64 rng(seed);
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        s += vocab[rng() % 8];
        s += (i % 15 == 14) ? ". " : " ";
    }
    return s;
}

void BM_Tokenize(benchmark::State& state) {
    const auto text = prose(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(coc::count_tokens(text));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize)->Arg(8192)->Arg(131072);

void BM_ChunkDocument(benchmark::State& state) {
    const coc::Document doc{"d", prose(static_cast<std::size_t>(state.range(0)), 2), ""};
    for (auto _ : state) {
        benchmark::DoNotOptimize(coc::chunk_document(doc, 512));
    }
}
BENCHMARK(BM_ChunkDocument)->Arg(8192)->Arg(131072);

void BM_PadToTarget(benchmark::State& state) {
    std::vector<coc::Document> pool;
    for (int i = 0; i < 40; ++i) {
        pool.push_back({"x" + std::to_string(i), prose(4000, 10 + i), ""});
    }
    const coc::Document base{"base", prose(4000, 3), ""};
    const coc::QAItem item{"q", "base", "?", {"a"}, std::vector<int>{2, 5}};
    const coc::LengthSpec spec{static_cast<std::size_t>(state.range(0)), coc::LengthMode::pad_distractors};
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(coc::synthesize_context(item, base, pool, spec, seed++, 512));
    }
}
BENCHMARK(BM_PadToTarget)->Arg(8192)->Arg(32768)->Arg(131072)->Unit(benchmark::kMillisecond);

}  // namespace
