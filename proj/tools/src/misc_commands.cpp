#include <algorithm>
#include <cstdio>

#include "cli.hpp"
#include "coc/dataset_forge.hpp"
#include "coc/errors.hpp"
#include "coc/jsonl.hpp"
#include "coc/path_search.hpp"
#include "coc/run_config.hpp"

namespace coc::cli {

int cmd_stats(const StatsOptions& opts, std::ostream& out, std::ostream& err) {
    const auto& dir = opts.run_dir;
    std::vector<SearchResult> results;
    Corpus corpus;
    RunConfig config;
    try {
        config = load_run_config(dir / "config.snapshot.json");
        const auto inputs = json::parse(read_text_file(dir / "inputs.json"));
        for (const auto& p : inputs.at("corpus_paths")) {
            load_corpus_into(corpus, p.get<std::string>());
        }
        std::vector<std::filesystem::path> files;
        if (std::filesystem::is_directory(dir / "results")) {
            for (const auto& entry : std::filesystem::directory_iterator(dir / "results")) {
                if (entry.path().extension() == ".json") {
                    files.push_back(entry.path());
                }
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            results.push_back(json::parse(read_text_file(f)).get<SearchResult>());
        }
    } catch (const std::exception& e) {
        err << "coc stats: " << e.what() << "\n";
        return kUsage;
    }
    std::size_t skipped = 0;
    const auto sft = build_sft(results, &skipped);
    const auto dpo = build_dpo(results, config.dpo_cap_per_item);
    const auto stats = compute_stats(corpus.documents, results, sft, dpo, config.search.max_depth);
    out << "items            " << stats.num_items << "\n";
    out << "sft examples     " << stats.num_sft << "\n";
    out << "dpo pairs        " << stats.num_pairs << "\n";
    out << "unsolved         " << stats.skipped_unsolved << "\n";
    out << "target tokens    " << stats.total_target_tokens << "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", stats.input_len.mean);
    out << "input tokens     mean " << buf << ", max " << stats.input_len.max << "\n";
    for (std::size_t d = 0; d < stats.recall_by_depth.size(); ++d) {
        std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * stats.recall_by_depth[d]);
        out << "recall depth<=" << d + 1 << "  " << buf << "\n";
    }
    return kOk;
}

int cmd_validate(const ValidateOptions& opts, std::ostream& out, std::ostream& err) {
    ArtifactKind kind;
    try {
        if (opts.kind) {
            kind = artifact_kind_from_string(*opts.kind);
        } else if (auto guessed = guess_artifact_kind(opts.path)) {
            kind = *guessed;
        } else {
            err << "coc validate: cannot tell the artifact kind of " << opts.path.generic_string()
                << "; pass --kind\n";
            return kUsage;
        }
    } catch (const Error& e) {
        err << "coc validate: " << e.what() << "\n";
        return kUsage;
    }
    std::optional<VerdictIndex> verdicts;
    if (kind == ArtifactKind::sft || kind == ArtifactKind::dpo) {
        auto path = opts.verdicts.value_or(opts.path.parent_path() / "verdicts.jsonl");
        if (std::filesystem::exists(path)) {
            try {
                verdicts = load_verdict_index(path);
            } catch (const Error& e) {
                err << "coc validate: " << e.what() << "\n";
                return kFailure;
            }
        } else if (opts.verdicts) {
            err << "coc validate: no verdict log at " << path.generic_string() << "\n";
            return kUsage;
        }
    }
    const auto problems = validate_artifact(opts.path, kind, verdicts ? &*verdicts : nullptr);
    if (problems.empty()) {
        out << opts.path.generic_string() << ": ok" << (verdicts ? " (verdicts re-joined)" : "") << "\n";
        return kOk;
    }
    for (const auto& p : problems) {
        out << opts.path.generic_string() << ": " << p << "\n";
    }
    return kFailure;
}

int cmd_export_recipe(const RecipeOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        const auto stage = recipe_stage_from_string(opts.stage);
        emit_training_recipe(stage, opts.out);
    } catch (const Error& e) {
        err << "coc export-recipe: " << e.what() << "\n";
        return kUsage;
    }
    out << "wrote " << opts.out.generic_string() << "\n";
    return kOk;
}

}  // namespace coc::cli
