#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coc/coc_engine.hpp"
#include "coc/corpus.hpp"
#include "coc/jsonl.hpp"
#include "coc/llm_gateway.hpp"
#include "coc/prompts.hpp"
#include "coc/scoring.hpp"

namespace coc {

struct EvalTask {
    std::string name;
    LengthMode mode = LengthMode::pad_distractors;
    std::vector<std::size_t> length_ladder;
    std::vector<QAItem> items;
    // Base documents and the distractor pool.
    std::vector<Document> documents;

    // Throws ConfigError.
    void validate(std::size_t chunk_size) const;
};

// Manifest: {"name", "mode", "length_ladder", "corpus_paths"}; relative
// corpus paths resolve against the manifest's directory.
EvalTask load_task_manifest(const std::filesystem::path& path);

enum class StrategyKind { direct, coc, template_prompt };

struct StrategySpec {
    StrategyKind kind = StrategyKind::direct;
    int rounds = 1;
    std::set<Ablation> ablations;
    // template_prompt only.
    std::string template_name;
    std::string template_text;

    // "direct", "coc@1", "coc@3-no_pointback", "template:<name>"
    std::string label() const;
    void validate() const;
};

struct EvalConfig {
    std::size_t chunk_size = kDefaultChunkSize;
    std::uint64_t seed = 0;
    std::size_t concurrency = 1;
    bool allow_empty_grounding = true;
};

struct EvalRow {
    std::string task;
    std::size_t length = 0;
    std::string strategy;
    std::size_t items = 0;
    std::size_t correct = 0;
    std::size_t incorrect = 0;
    std::size_t unverifiable = 0;
    std::size_t failed = 0;
    // Truncate mode: items whose gold evidence fell outside the context.
    std::size_t gold_cut = 0;
    LedgerTotals ledger;

    // Correct over all items; unverifiable and failed stay in the
    // denominator.
    double accuracy() const;
    double avg_generated_tokens() const;

    bool operator==(const EvalRow&) const = default;
};

struct EvalReport {
    std::vector<EvalRow> rows;

    void merge(const EvalReport& other);
    std::vector<std::string> tasks() const;
    std::vector<std::string> strategies(const std::string& task) const;
    std::vector<std::size_t> lengths(const std::string& task) const;
    const EvalRow* find(const std::string& task, std::size_t length, const std::string& strategy) const;

    // Average generated tokens per item for a strategy across lengths.
    double avg_generated_tokens(const std::string& task, const std::string& strategy) const;
    // That average over the direct strategy's; nullopt without a direct row.
    std::optional<double> overhead_ratio(const std::string& task, const std::string& strategy) const;
    std::size_t unverifiable(const std::string& task, const std::string& strategy) const;

    bool operator==(const EvalReport&) const = default;
};

// Per-item outcome written to the item log.
struct EvalItemRecord {
    std::string task;
    std::size_t length = 0;
    std::string strategy;
    std::string item_id;
    std::string status;  // correct | incorrect | unverifiable | failed
    std::string final_answer;
    std::string error;
    bool gold_cut = false;
    std::vector<Stage> stages;
    std::vector<ChatMessage> transcript;  // context message elided
};

// For each (item, length): synthesize the context, run the strategy, judge
// the final answer. Per-item failures are recorded, never fatal.
EvalReport run_eval(const EvalTask& task, const StrategySpec& strategy, const EvalConfig& config,
                    Gateway& worker, Scorer& judge, const PromptTemplates& templates,
                    JsonlWriter* item_log = nullptr);

enum class ReportFormat { tsv, json, markdown_table };

// "8K" for multiples of 1024, the raw count otherwise.
std::string length_label(std::size_t tokens);

// One table per task: a row per strategy, a column per length with
// accuracy in percent (one decimal), then unverifiable count, average
// generated tokens, and overhead ratio against direct.
std::string render_report(const EvalReport& report, ReportFormat format);
void write_report_files(const EvalReport& report, const std::filesystem::path& dir);

void to_json(nlohmann::json& j, const EvalRow& row);
void from_json(const nlohmann::json& j, EvalRow& row);
void to_json(nlohmann::json& j, const EvalItemRecord& record);

}  // namespace coc
