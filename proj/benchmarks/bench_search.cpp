#include <benchmark/benchmark.h>

#include <filesystem>
#include <memory>

#include "coc/path_search.hpp"
#include "coc/scripted_backend.hpp"

namespace {

const std::filesystem::path kData = COC_DATA_DIR;

coc::BackendConfig mock(const std::string& model) {
    coc::BackendConfig c;
    c.kind = coc::BackendKind::scripted_mock;
    c.script = "inline";
    c.model_name = model;
    return c;
}

// Full B=8, D=3 search over a scripted worker that never answers correctly.
void BM_ScriptedSearchAllIncorrect(benchmark::State& state) {
    const auto corpus = coc::load_corpus(kData / "scripts" / "scenario_corpus.jsonl");
    const auto& item = corpus.items.front();
    const auto& doc = *corpus.find_document(item.document_id);
    auto worker_backend =
        std::make_shared<coc::ScriptedBackend>(coc::load_script(kData / "scripts" / "all_incorrect.jsonl"));
    auto judge_backend = std::make_shared<coc::ScriptedBackend>(coc::load_script(kData / "toy" / "judge.jsonl"));
    const auto templates = coc::PromptTemplates::builtin();
    coc::SearchConfig cfg;
    cfg.chunk_size = 64;
    cfg.concurrency = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        coc::Gateway worker(worker_backend, mock("worker"));
        coc::Gateway judge(judge_backend, mock("judge"));
        coc::Scorer scorer(judge);
        coc::PathSearch search(worker, scorer, templates, cfg);
        benchmark::DoNotOptimize(search.search(item, doc));
    }
}
BENCHMARK(BM_ScriptedSearchAllIncorrect)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
