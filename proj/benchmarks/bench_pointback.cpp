#include <benchmark/benchmark.h>

#include <string>

#include "coc/pointback_parser.hpp"

namespace {

void BM_ParsePointbackProse(benchmark::State& state) {
    const std::string reply =
        "The clarification is answered by paragraph 3, with supporting detail in paras 7-9 and "
        "paragraph 12; paragraph 40 is unrelated.";
    for (auto _ : state) {
        benchmark::DoNotOptimize(coc::parse_pointback(reply, 32));
    }
}
BENCHMARK(BM_ParsePointbackProse);

void BM_ParsePointbackLongReply(benchmark::State& state) {
    std::string reply;
    for (int i = 0; i < state.range(0); ++i) {
        reply += "Paragraph " + std::to_string(i % 256 + 1) + " mentions the mill. ";
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(coc::parse_pointback(reply, 256));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * reply.size()));
}
BENCHMARK(BM_ParsePointbackLongReply)->Arg(16)->Arg(1024);

void BM_ParseYesNo(benchmark::State& state) {
    const std::string reply = "Yes, this paragraph says where the carts were loaded.";
    for (auto _ : state) {
        benchmark::DoNotOptimize(coc::parse_yes_no(reply));
    }
}
BENCHMARK(BM_ParseYesNo);

}  // namespace
