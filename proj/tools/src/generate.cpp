#include <set>

#include "cli.hpp"
#include "coc/dataset_forge.hpp"
#include "coc/errors.hpp"
#include "coc/jsonl.hpp"
#include "coc/path_search.hpp"
#include "support.hpp"

namespace coc::cli {

namespace {

constexpr const char* kRunOutputs[] = {
    "calls_worker.jsonl", "calls_judge.jsonl", "verdicts.jsonl", "errors.jsonl", "tree",
    "results",            "traces",            "transcripts",    "sft.jsonl",    "dpo.jsonl",
    "stats.json",         "recipe_sft.json",   "recipe_dpo.json",
};

void write_trace_files(const std::filesystem::path& run_dir, const SearchResult& result) {
    const std::string stem = safe_file_stem(result.item_id);
    const auto transcript_ref = std::filesystem::path("transcripts") / (stem + ".json");
    const auto& t = result.best_trace;
    std::vector<std::string> stages;
    for (auto s : t.stages) {
        stages.emplace_back(to_string(s));
    }
    json transcript{{"item_id", t.item_id}, {"messages", t.transcript}, {"stages", stages}};
    json trace{{"item_id", t.item_id},
               {"steps", t.steps},
               {"final_answer", t.final_answer},
               {"score", t.score ? json(*t.score) : json(nullptr)},
               {"solved", result.solved},
               {"transcript_ref", transcript_ref.generic_string()}};
    std::filesystem::create_directories(run_dir / "transcripts");
    std::filesystem::create_directories(run_dir / "traces");
    write_file_atomic(run_dir / transcript_ref, transcript.dump(1) + "\n");
    write_file_atomic(run_dir / "traces" / (stem + ".json"), trace.dump(1) + "\n");
}

}  // namespace

int cmd_generate(const GenerateOptions& opts, std::ostream& out, std::ostream& err) {
    RunConfig config;
    Corpus corpus;
    try {
        config = load_run_config(opts.config);
        if (opts.run_dir) config.run_dir = *opts.run_dir;
        if (opts.seed) config.seed = *opts.seed;
        if (opts.branching) config.search.branching = *opts.branching;
        if (opts.depth) config.search.max_depth = *opts.depth;
        if (opts.no_early_stop) config.search.early_stop_on_correct = false;
        if (opts.concurrency) config.concurrency = *opts.concurrency;
        config.finalize();
        for (const auto& path : opts.corpora) {
            load_corpus_into(corpus, path);
        }
        validate_corpus(corpus, config.chunk_size);
    } catch (const LineError& e) {
        err << "coc generate: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        err << "coc generate: " << e.what() << "\n";
        return kUsage;
    }

    const auto& dir = config.run_dir;
    try {
        std::filesystem::create_directories(dir);
        if (!opts.resume) {
            for (const char* name : kRunOutputs) {
                remove_output(dir / name);
            }
        }
        json inputs{{"corpus_paths", json::array()}};
        for (const auto& p : opts.corpora) {
            inputs["corpus_paths"].push_back(std::filesystem::absolute(p).lexically_normal().generic_string());
        }
        write_file_atomic(dir / "config.snapshot.json", to_json(config).dump(2) + "\n");
        write_file_atomic(dir / "inputs.json", inputs.dump(2) + "\n");
        write_file_atomic(dir / "versions.json", versions_stamp());
    } catch (const std::exception& e) {
        err << "coc generate: cannot prepare " << dir << ": " << e.what() << "\n";
        return kFailure;
    }

    std::unique_ptr<Gateway> worker;
    std::unique_ptr<Gateway> judge_gateway;
    PromptTemplates templates;
    try {
        worker = open_gateway(config.worker, config.concurrency, dir / "calls_worker.jsonl");
        judge_gateway = open_gateway(config.judge, config.concurrency, dir / "calls_judge.jsonl");
        templates = load_templates(config);
    } catch (const ResumeError& e) {
        err << "coc generate: " << e.what() << "\n";
        return kFailure;
    } catch (const Error& e) {
        err << "coc generate: " << e.what() << "\n";
        return kUsage;
    }

    auto verdicts = std::make_shared<JsonlWriter>(dir / "verdicts.jsonl", true);
    JsonlWriter errors(dir / "errors.jsonl", opts.resume);
    Scorer scorer(*judge_gateway, verdicts);
    PathSearch search(*worker, scorer, templates, config.search);
    search.set_warning_sink([&err](const std::string& m) { err << "warning: " << m << "\n"; });
    SearchCheckpoint checkpoint(dir);

    std::vector<SearchResult> results;
    std::size_t aborted = 0;
    for (const auto& item : corpus.items) {
        const Document* doc = corpus.find_document(item.document_id);
        try {
            auto result = checkpoint.run(search, item, *doc);
            write_trace_files(dir, result);
            results.push_back(std::move(result));
        } catch (const SearchAborted& e) {
            ++aborted;
            errors.write({{"item_id", item.id}, {"error", e.what()}, {"partial_tree", json::parse(e.partial_tree())}});
            err << "coc generate: item " << item.id << " aborted: " << e.what() << "\n";
        } catch (const ResumeError& e) {
            err << "coc generate: " << e.what() << "\n";
            return kFailure;
        } catch (const Error& e) {
            ++aborted;
            errors.write({{"item_id", item.id}, {"error", e.what()}});
            err << "coc generate: item " << item.id << " failed: " << e.what() << "\n";
        }
    }

    std::size_t skipped = 0;
    try {
        const auto sft = build_sft(results, &skipped);
        const auto dpo = build_dpo(results, config.dpo_cap_per_item,
                                   [&err](const std::string& m) { err << "warning: " << m << "\n"; });
        const auto stats = compute_stats(corpus.documents, results, sft, dpo, config.search.max_depth);
        write_file_atomic(dir / "sft.jsonl", to_jsonl(std::span<const SftExample>(sft)));
        write_file_atomic(dir / "dpo.jsonl", to_jsonl(std::span<const PreferencePair>(dpo)));
        write_file_atomic(dir / "stats.json", json(stats).dump(2) + "\n");
        emit_training_recipe(RecipeStage::sft, dir / "recipe_sft.json");
        emit_training_recipe(RecipeStage::dpo, dir / "recipe_dpo.json");
        out << "items " << corpus.items.size() << ", solved " << sft.size() << ", unsolved " << skipped
            << ", aborted " << aborted << ", sft " << sft.size() << ", dpo pairs " << dpo.size() << "\n";
        out << "model calls: worker " << worker->backend_calls() << " (replayed " << worker->replayed_calls()
            << "), judge " << judge_gateway->backend_calls() << " (replayed " << judge_gateway->replayed_calls()
            << ")\n";
        out << "run directory: " << dir.generic_string() << "\n";
    } catch (const ExportError& e) {
        err << "coc generate: export failed for item " << e.item_id() << ": " << e.what() << "\n";
        return kFailure;
    }
    return aborted == 0 ? kOk : kFailure;
}

}  // namespace coc::cli
