#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "coc/scoring.hpp"

namespace {

std::vector<std::string> random_tokens(std::size_t n, std::mt19937_64& rng) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back("w" + std::to_string(rng() % 40));
    }
    return out;
}

void BM_RougeLTokens(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_tokens(n, rng);
    const auto b = random_tokens(n, rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(coc::rouge_l_tokens(a, b));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_RougeLTokens)->RangeMultiplier(4)->Range(8, 2048)->Complexity(benchmark::oNSquared);

void BM_BestRougeAgainstGolds(benchmark::State& state) {
    const std::vector<std::string> golds{"the north gate", "north gate", "the gate on the north side of the yard"};
    const std::string predicted = "The loaded carts left the mill yard through the north gate onto the main road.";
    for (auto _ : state) {
        benchmark::DoNotOptimize(coc::best_rouge_l(predicted, golds));
    }
}
BENCHMARK(BM_BestRougeAgainstGolds);

void BM_ParseJudgeReply(benchmark::State& state) {
    const std::string reply =
        "Sure. {\"explanation\": \"The prediction names the gate.\", \"confidence\": 0.9, \"correct_answer\": true}";
    for (auto _ : state) {
        benchmark::DoNotOptimize(coc::parse_judge_reply(reply));
    }
}
BENCHMARK(BM_ParseJudgeReply);

}  // namespace
