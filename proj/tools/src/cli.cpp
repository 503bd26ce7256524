#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

namespace coc::cli {

std::string versions_stamp() {
    nlohmann::json j{{"coc", COC_VERSION},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"cli11", CLI11_VERSION}};
    return j.dump(2) + "\n";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Chain-of-Clarifications data generation and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(COC_VERSION));

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Search clarification paths and export SFT/DPO data");
    g->add_option("--config", gen.config, "Run configuration JSON")->required();
    g->add_option("--corpus", gen.corpora, "Corpus JSONL (repeatable)")->required();
    g->add_option("--run-dir", gen.run_dir, "Output directory (overrides the config)");
    g->add_flag("--resume", gen.resume, "Continue an interrupted run in place");
    g->add_option("--seed", gen.seed, "Seed override");
    g->add_option("--branching", gen.branching, "Branching factor override");
    g->add_option("--depth", gen.depth, "Maximum depth override");
    g->add_flag("--no-early-stop", gen.no_early_stop, "Expand every depth even after a correct answer");
    g->add_option("--concurrency", gen.concurrency, "Concurrent model calls");

    EvaluateOptions ev;
    auto* e = app.add_subcommand("evaluate", "Length-controlled accuracy evaluation");
    e->add_option("--config", ev.config, "Run configuration JSON")->required();
    e->add_option("--task", ev.task, "Task manifest JSON")->required();
    e->add_option("--run-dir", ev.run_dir, "Output directory (overrides the config)");
    e->add_option("--strategy", ev.strategies, "direct, coc or template (repeatable)");
    e->add_option("--rounds", ev.rounds, "Rounds for the coc strategy (repeatable)");
    e->add_option("--ablate", ev.ablations, "no_clarification or no_pointback (repeatable)");
    e->add_option("--lengths", ev.lengths, "Comma-separated target lengths, e.g. 8192,16384");
    e->add_option("--template", ev.template_files, "Prompt file for the template strategy (repeatable)");
    e->add_option("--seed", ev.seed, "Seed override");
    e->add_option("--concurrency", ev.concurrency, "Concurrent items");

    StatsOptions st;
    auto* s = app.add_subcommand("stats", "Recompute dataset statistics for a run directory");
    s->add_option("--run-dir", st.run_dir, "Run directory")->required();

    ValidateOptions va;
    auto* v = app.add_subcommand("validate", "Check an exported artifact against its schema");
    v->add_option("path", va.path, "sft.jsonl, dpo.jsonl, stats.json or recipe_*.json")->required();
    v->add_option("--kind", va.kind, "sft, dpo, stats or recipe (default: from the file name)");
    v->add_option("--verdicts", va.verdicts, "Verdict log to re-join (default: verdicts.jsonl next to the file)");

    RecipeOptions re;
    auto* r = app.add_subcommand("export-recipe", "Write the training recipe for a finetuning stage");
    r->add_option("--stage", re.stage, "sft or dpo")->required();
    r->add_option("--out", re.out, "Output JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        if (ex.get_exit_code() == 0) {
            out << (dynamic_cast<const CLI::CallForVersion*>(&ex) ? std::string(COC_VERSION) + "\n" : app.help());
            return kOk;
        }
        err << "coc: " << ex.what() << "\n";
        return kUsage;
    }

    if (g->parsed()) return cmd_generate(gen, out, err);
    if (e->parsed()) return cmd_evaluate(ev, out, err);
    if (s->parsed()) return cmd_stats(st, out, err);
    if (v->parsed()) return cmd_validate(va, out, err);
    return cmd_export_recipe(re, out, err);
}

}  // namespace coc::cli
