#include <set>
#include <sstream>

#include "cli.hpp"
#include "coc/errors.hpp"
#include "coc/eval_harness.hpp"
#include "coc/jsonl.hpp"
#include "support.hpp"

namespace coc::cli {

namespace {

std::vector<std::size_t> parse_lengths(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.empty()) {
            continue;
        }
        std::size_t multiplier = 1;
        if (part.back() == 'K' || part.back() == 'k') {
            multiplier = 1024;
            part.pop_back();
        }
        std::size_t used = 0;
        unsigned long long value = 0;
        try {
            value = std::stoull(part, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != part.size() || value == 0) {
            throw ConfigError("--lengths: cannot parse '" + part + "'");
        }
        out.push_back(static_cast<std::size_t>(value) * multiplier);
    }
    if (out.empty()) {
        throw ConfigError("--lengths is empty");
    }
    return out;
}

std::vector<StrategySpec> build_strategies(const EvaluateOptions& opts) {
    std::vector<std::string> names = opts.strategies;
    if (names.empty()) {
        names = {"direct", "coc"};
    }
    std::set<Ablation> ablations;
    for (const auto& a : opts.ablations) {
        ablations.insert(ablation_from_string(a));
    }
    std::vector<int> rounds = opts.rounds.empty() ? std::vector<int>{1} : opts.rounds;
    std::vector<StrategySpec> out;
    for (const auto& name : names) {
        if (name == "direct") {
            out.push_back(StrategySpec{});
        } else if (name == "coc") {
            for (int r : rounds) {
                StrategySpec s;
                s.kind = StrategyKind::coc;
                s.rounds = r;
                s.ablations = ablations;
                out.push_back(s);
            }
        } else if (name == "template") {
            if (opts.template_files.empty()) {
                throw ConfigError("--strategy template needs at least one --template file");
            }
            for (const auto& file : opts.template_files) {
                StrategySpec s;
                s.kind = StrategyKind::template_prompt;
                s.template_name = file.stem().string();
                s.template_text = read_text_file(file);
                while (!s.template_text.empty() && (s.template_text.back() == '\n' || s.template_text.back() == '\r')) {
                    s.template_text.pop_back();
                }
                out.push_back(s);
            }
        } else {
            throw ConfigError("unknown strategy '" + name + "' (expected direct, coc or template)");
        }
    }
    for (const auto& s : out) {
        s.validate();
    }
    return out;
}

}  // namespace

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err) {
    RunConfig config;
    EvalTask task;
    std::vector<StrategySpec> strategies;
    try {
        config = load_run_config(opts.config);
        if (opts.run_dir) config.run_dir = *opts.run_dir;
        if (opts.seed) config.seed = *opts.seed;
        if (opts.concurrency) config.concurrency = *opts.concurrency;
        config.finalize();
        task = load_task_manifest(opts.task);
        if (opts.lengths) {
            task.length_ladder = parse_lengths(*opts.lengths);
        }
        task.validate(config.chunk_size);
        strategies = build_strategies(opts);
    } catch (const Error& e) {
        err << "coc evaluate: " << e.what() << "\n";
        return kUsage;
    }

    const auto& dir = config.run_dir;
    for (const char* name : {"eval_calls_worker.jsonl", "eval_calls_judge.jsonl", "eval_verdicts.jsonl",
                             "eval_items.jsonl", "report.tsv", "report.json", "report.md"}) {
        remove_output(dir / name);
    }
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "config.snapshot.json", to_json(config).dump(2) + "\n");
    write_file_atomic(dir / "versions.json", versions_stamp());

    std::unique_ptr<Gateway> worker;
    std::unique_ptr<Gateway> judge_gateway;
    PromptTemplates templates;
    try {
        worker = open_gateway(config.worker, config.concurrency, dir / "eval_calls_worker.jsonl");
        judge_gateway = open_gateway(config.judge, config.concurrency, dir / "eval_calls_judge.jsonl");
        templates = load_templates(config);
    } catch (const Error& e) {
        err << "coc evaluate: " << e.what() << "\n";
        return kUsage;
    }

    auto verdicts = std::make_shared<JsonlWriter>(dir / "eval_verdicts.jsonl", false);
    JsonlWriter items(dir / "eval_items.jsonl", false);
    Scorer scorer(*judge_gateway, verdicts);
    EvalConfig eval_cfg;
    eval_cfg.chunk_size = config.chunk_size;
    eval_cfg.seed = config.seed;
    eval_cfg.concurrency = config.concurrency;
    eval_cfg.allow_empty_grounding = config.allow_empty_grounding;

    EvalReport report;
    std::size_t failed = 0;
    for (const auto& strategy : strategies) {
        auto part = run_eval(task, strategy, eval_cfg, *worker, scorer, templates, &items);
        for (const auto& row : part.rows) {
            failed += row.failed;
        }
        report.merge(part);
    }
    write_report_files(report, dir);
    out << render_report(report, ReportFormat::markdown_table);
    if (failed > 0) {
        err << "coc evaluate: " << failed << " item runs failed; see " << (dir / "eval_items.jsonl").generic_string()
            << "\n";
    }
    return kOk;
}

}  // namespace coc::cli
