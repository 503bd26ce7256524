#include "coc/eval_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "coc/errors.hpp"
#include "coc/hash.hpp"
#include "coc/rng.hpp"

namespace coc {

void EvalTask::validate(std::size_t chunk_size) const {
    if (name.empty()) {
        throw ConfigError("task name is empty");
    }
    if (items.empty()) {
        throw ConfigError("task '" + name + "' has no items");
    }
    if (length_ladder.empty()) {
        throw ConfigError("task '" + name + "' has an empty length ladder");
    }
    for (std::size_t i = 0; i < length_ladder.size(); ++i) {
        if (i > 0 && length_ladder[i] <= length_ladder[i - 1]) {
            throw ConfigError("task '" + name + "': length ladder must be strictly ascending");
        }
        if (length_ladder[i] < chunk_size) {
            throw ConfigError("task '" + name + "': length " + std::to_string(length_ladder[i]) +
                              " is below the chunk size " + std::to_string(chunk_size));
        }
    }
    for (const auto& item : items) {
        const bool found = std::any_of(documents.begin(), documents.end(),
                                       [&](const Document& d) { return d.id == item.document_id; });
        if (!found) {
            throw ConfigError("task '" + name + "': item '" + item.id + "' references unknown document '" +
                              item.document_id + "'");
        }
    }
}

EvalTask load_task_manifest(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    EvalTask task;
    try {
        for (const auto& [key, value] : doc.items()) {
            if (key != "name" && key != "mode" && key != "length_ladder" && key != "corpus_paths") {
                throw ConfigError(path.string() + ": unknown manifest key '" + key + "'");
            }
        }
        task.name = doc.at("name").get<std::string>();
        task.mode = length_mode_from_string(doc.value("mode", std::string("pad_distractors")));
        task.length_ladder = doc.at("length_ladder").get<std::vector<std::size_t>>();
        Corpus corpus;
        for (const auto& p : doc.at("corpus_paths")) {
            std::filesystem::path corpus_path = p.get<std::string>();
            if (corpus_path.is_relative()) {
                corpus_path = path.parent_path() / corpus_path;
            }
            load_corpus_into(corpus, corpus_path);
        }
        task.items = std::move(corpus.items);
        task.documents = std::move(corpus.documents);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return task;
}

std::string StrategySpec::label() const {
    switch (kind) {
        case StrategyKind::direct:
            return "direct";
        case StrategyKind::template_prompt:
            return "template:" + template_name;
        case StrategyKind::coc: {
            std::string out = "coc@" + std::to_string(rounds);
            for (auto a : ablations) {
                out += "-";
                out += to_string(a);
            }
            return out;
        }
    }
    return "direct";
}

void StrategySpec::validate() const {
    if (kind == StrategyKind::coc && rounds < 1) {
        throw ConfigError("coc strategy needs at least one round");
    }
    if (kind != StrategyKind::coc && !ablations.empty()) {
        throw ConfigError("ablations only apply to the coc strategy");
    }
    if (kind == StrategyKind::template_prompt && (template_name.empty() || template_text.empty())) {
        throw ConfigError("template strategy needs a name and a template text");
    }
}

double EvalRow::accuracy() const {
    return items == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(items);
}

double EvalRow::avg_generated_tokens() const {
    return items == 0 ? 0.0 : static_cast<double>(ledger.generated_tokens) / static_cast<double>(items);
}

void EvalReport::merge(const EvalReport& other) { rows.insert(rows.end(), other.rows.begin(), other.rows.end()); }

std::vector<std::string> EvalReport::tasks() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (std::find(out.begin(), out.end(), r.task) == out.end()) {
            out.push_back(r.task);
        }
    }
    return out;
}

std::vector<std::string> EvalReport::strategies(const std::string& task) const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
        if (r.task == task && std::find(out.begin(), out.end(), r.strategy) == out.end()) {
            out.push_back(r.strategy);
        }
    }
    return out;
}

std::vector<std::size_t> EvalReport::lengths(const std::string& task) const {
    std::vector<std::size_t> out;
    for (const auto& r : rows) {
        if (r.task == task) {
            out.push_back(r.length);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

const EvalRow* EvalReport::find(const std::string& task, std::size_t length, const std::string& strategy) const {
    for (const auto& r : rows) {
        if (r.task == task && r.length == length && r.strategy == strategy) {
            return &r;
        }
    }
    return nullptr;
}

double EvalReport::avg_generated_tokens(const std::string& task, const std::string& strategy) const {
    std::uint64_t tokens = 0;
    std::size_t items = 0;
    for (const auto& r : rows) {
        if (r.task == task && r.strategy == strategy) {
            tokens += r.ledger.generated_tokens;
            items += r.items;
        }
    }
    return items == 0 ? 0.0 : static_cast<double>(tokens) / static_cast<double>(items);
}

std::optional<double> EvalReport::overhead_ratio(const std::string& task, const std::string& strategy) const {
    const auto strategies_here = strategies(task);
    if (std::find(strategies_here.begin(), strategies_here.end(), "direct") == strategies_here.end()) {
        return std::nullopt;
    }
    const double base = avg_generated_tokens(task, "direct");
    if (base <= 0.0) {
        return std::nullopt;
    }
    return avg_generated_tokens(task, strategy) / base;
}

std::size_t EvalReport::unverifiable(const std::string& task, const std::string& strategy) const {
    std::size_t n = 0;
    for (const auto& r : rows) {
        if (r.task == task && r.strategy == strategy) {
            n += r.unverifiable;
        }
    }
    return n;
}

namespace {

struct ItemOutcome {
    EvalItemRecord record;
    LedgerTotals ledger;
};

std::vector<ChatMessage> elide_context(std::vector<ChatMessage> transcript, const std::vector<Stage>& stages) {
    for (std::size_t i = 0; i < transcript.size() && i < stages.size(); ++i) {
        if (stages[i] == Stage::context) {
            transcript[i].content =
                "[context elided: " + std::to_string(count_tokens(transcript[i].content)) + " tokens]";
        }
    }
    return transcript;
}

}  // namespace

EvalReport run_eval(const EvalTask& task, const StrategySpec& strategy, const EvalConfig& config, Gateway& worker,
                    Scorer& judge, const PromptTemplates& templates, JsonlWriter* item_log) {
    task.validate(config.chunk_size);
    strategy.validate();
    const std::string label = strategy.label();

    PromptTemplates local = templates;
    if (strategy.kind == StrategyKind::template_prompt) {
        local.set_variants(Stage::final_answer, {strategy.template_text});
    }
    CocConfig engine_cfg;
    engine_cfg.pointback_mode = PointbackMode::direct_pointback;
    engine_cfg.allow_empty_grounding = config.allow_empty_grounding;
    engine_cfg.ablations = strategy.ablations;

    EvalReport report;
    for (const std::size_t length : task.length_ladder) {
        std::vector<ItemOutcome> outcomes(task.items.size());
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next++; i < task.items.size(); i = next++) {
                const auto& item = task.items[i];
                auto& out = outcomes[i];
                out.record.task = task.name;
                out.record.length = length;
                out.record.strategy = label;
                out.record.item_id = item.id;
                TokenLedger ledger;
                try {
                    const auto* base = &*std::find_if(task.documents.begin(), task.documents.end(),
                                                      [&](const Document& d) { return d.id == item.document_id; });
                    const std::uint64_t seed = derive_seed(config.seed, {fnv1a64(item.id), length});
                    const auto ctx = synthesize_context(item, *base, task.documents, LengthSpec{length, task.mode},
                                                        seed, config.chunk_size);
                    out.record.gold_cut = !ctx.gold_cut.empty();
                    const auto chunks = chunk_document(ctx.document, config.chunk_size);
                    CocEngine engine(worker, local, engine_cfg);
                    engine.set_ledger(&ledger);
                    CocTrace trace;
                    if (strategy.kind == StrategyKind::coc) {
                        trace = engine.run_inference(item, chunks, strategy.rounds, seed);
                    } else {
                        auto session = engine.open_session(item, chunks, seed);
                        trace.item_id = item.id;
                        trace.final_answer = engine.answer_original(session, seed, 0);
                        trace.transcript = session.chat.messages();
                        trace.stages = session.stages;
                    }
                    out.record.final_answer = trace.final_answer;
                    out.record.stages = trace.stages;
                    out.record.transcript = elide_context(trace.transcript, trace.stages);
                    const auto score = judge.score_or_unverifiable(item, trace.final_answer);
                    out.record.status = !score.verifiable() ? "unverifiable" : score.correct() ? "correct" : "incorrect";
                } catch (const std::exception& e) {
                    out.record.status = "failed";
                    out.record.error = e.what();
                }
                out.ledger = ledger.totals();
            }
        };
        const std::size_t workers = std::max<std::size_t>(1, std::min(config.concurrency, task.items.size()));
        if (workers == 1) {
            work();
        } else {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back(work);
            }
        }

        EvalRow row;
        row.task = task.name;
        row.length = length;
        row.strategy = label;
        row.items = task.items.size();
        for (const auto& o : outcomes) {
            const auto& s = o.record.status;
            if (s == "correct") {
                ++row.correct;
            } else if (s == "incorrect") {
                ++row.incorrect;
            } else if (s == "unverifiable") {
                ++row.unverifiable;
            } else {
                ++row.failed;
            }
            if (o.record.gold_cut) {
                ++row.gold_cut;
            }
            row.ledger += o.ledger;
            if (item_log != nullptr) {
                item_log->write(json(o.record));
            }
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::string length_label(std::size_t tokens) {
    if (tokens > 0 && tokens % 1024 == 0) {
        return std::to_string(tokens / 1024) + "K";
    }
    return std::to_string(tokens);
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

struct TableRow {
    std::string strategy;
    std::vector<std::string> accuracy;  // percent, one decimal, "-" when absent
    std::size_t unverifiable = 0;
    std::string avg_tokens;
    std::string overhead;  // percent of direct, "-" without a direct row
};

struct Table {
    std::string task;
    std::vector<std::size_t> lengths;
    std::vector<TableRow> rows;
};

std::vector<Table> tabulate(const EvalReport& report) {
    std::vector<Table> tables;
    for (const auto& task : report.tasks()) {
        Table t;
        t.task = task;
        t.lengths = report.lengths(task);
        for (const auto& strategy : report.strategies(task)) {
            TableRow row;
            row.strategy = strategy;
            for (auto len : t.lengths) {
                const auto* r = report.find(task, len, strategy);
                row.accuracy.push_back(r ? fixed(100.0 * r->accuracy(), 1) : "-");
            }
            row.unverifiable = report.unverifiable(task, strategy);
            row.avg_tokens = fixed(report.avg_generated_tokens(task, strategy), 2);
            const auto ratio = report.overhead_ratio(task, strategy);
            row.overhead = ratio ? fixed(100.0 * *ratio, 2) + "%" : "-";
            t.rows.push_back(std::move(row));
        }
        tables.push_back(std::move(t));
    }
    return tables;
}

json number_or_null(const std::string& cell) {
    if (cell == "-") {
        return nullptr;
    }
    return std::stod(cell);
}

}  // namespace

std::string render_report(const EvalReport& report, ReportFormat format) {
    const auto tables = tabulate(report);
    std::string out;
    if (format == ReportFormat::json) {
        json doc{{"tasks", json::array()}, {"rows", report.rows}};
        for (const auto& t : tables) {
            json jt{{"name", t.task}, {"lengths", t.lengths}, {"strategies", json::array()}};
            for (const auto& r : t.rows) {
                json acc = json::object();
                for (std::size_t i = 0; i < t.lengths.size(); ++i) {
                    acc[length_label(t.lengths[i])] = number_or_null(r.accuracy[i]);
                }
                std::string overhead = r.overhead;
                if (overhead != "-") {
                    overhead.pop_back();
                }
                jt["strategies"].push_back({{"strategy", r.strategy},
                                            {"accuracy_percent", acc},
                                            {"unverifiable", r.unverifiable},
                                            {"avg_generated_tokens", number_or_null(r.avg_tokens)},
                                            {"overhead_percent", number_or_null(overhead)}});
            }
            doc["tasks"].push_back(jt);
        }
        return doc.dump(2) + "\n";
    }
    for (const auto& t : tables) {
        if (!out.empty()) {
            out += "\n";
        }
        std::vector<std::string> header{"Strategy"};
        for (auto len : t.lengths) {
            header.push_back(length_label(len));
        }
        header.insert(header.end(), {"Unverifiable", "Avg Gen Tokens", "Overhead"});
        auto cells_of = [](const TableRow& r) {
            std::vector<std::string> cells{r.strategy};
            cells.insert(cells.end(), r.accuracy.begin(), r.accuracy.end());
            cells.push_back(std::to_string(r.unverifiable));
            cells.push_back(r.avg_tokens);
            cells.push_back(r.overhead);
            return cells;
        };
        if (format == ReportFormat::tsv) {
            out += "# " + t.task + "\n";
            auto line = [&](const std::vector<std::string>& cells) {
                for (std::size_t i = 0; i < cells.size(); ++i) {
                    out += (i ? "\t" : "") + cells[i];
                }
                out += "\n";
            };
            line(header);
            for (const auto& r : t.rows) {
                line(cells_of(r));
            }
        } else {
            out += "### " + t.task + "\n\n";
            auto line = [&](const std::vector<std::string>& cells) {
                out += "|";
                for (const auto& c : cells) {
                    out += " " + c + " |";
                }
                out += "\n";
            };
            line(header);
            out += "|";
            for (std::size_t i = 0; i < header.size(); ++i) {
                out += i == 0 ? " --- |" : " ---: |";
            }
            out += "\n";
            for (const auto& r : t.rows) {
                line(cells_of(r));
            }
        }
    }
    return out;
}

void write_report_files(const EvalReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "report.tsv", render_report(report, ReportFormat::tsv));
    write_file_atomic(dir / "report.json", render_report(report, ReportFormat::json));
    write_file_atomic(dir / "report.md", render_report(report, ReportFormat::markdown_table));
}

void to_json(nlohmann::json& j, const EvalRow& row) {
    j = json{{"task", row.task},
             {"length", row.length},
             {"strategy", row.strategy},
             {"items", row.items},
             {"correct", row.correct},
             {"incorrect", row.incorrect},
             {"unverifiable", row.unverifiable},
             {"failed", row.failed},
             {"gold_cut", row.gold_cut},
             {"ledger", row.ledger}};
}

void from_json(const nlohmann::json& j, EvalRow& row) {
    row.task = j.at("task").get<std::string>();
    row.length = j.at("length").get<std::size_t>();
    row.strategy = j.at("strategy").get<std::string>();
    row.items = j.at("items").get<std::size_t>();
    row.correct = j.at("correct").get<std::size_t>();
    row.incorrect = j.at("incorrect").get<std::size_t>();
    row.unverifiable = j.at("unverifiable").get<std::size_t>();
    row.failed = j.at("failed").get<std::size_t>();
    row.gold_cut = j.at("gold_cut").get<std::size_t>();
    row.ledger = j.at("ledger").get<LedgerTotals>();
}

void to_json(nlohmann::json& j, const EvalItemRecord& record) {
    std::vector<std::string> stages;
    for (auto s : record.stages) {
        stages.emplace_back(to_string(s));
    }
    j = json{{"task", record.task},
             {"length", record.length},
             {"strategy", record.strategy},
             {"item_id", record.item_id},
             {"status", record.status},
             {"final_answer", record.final_answer},
             {"error", record.error},
             {"gold_cut", record.gold_cut},
             {"stages", stages},
             {"transcript", record.transcript}};
}

}  // namespace coc
