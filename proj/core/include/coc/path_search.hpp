#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
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

struct SearchConfig {
    int branching = 8;
    int max_depth = 3;
    bool early_stop_on_correct = true;
    std::uint64_t seed = 0;
    // Incorrect completed paths kept per item, best-scored first.
    std::size_t negatives_cap = 8;
    std::size_t chunk_size = kDefaultChunkSize;
    // Sibling expansions in flight at once.
    std::size_t concurrency = 1;
    PointbackMode pointback_mode = PointbackMode::iterative_pointback;
    bool allow_empty_grounding = true;

    void validate() const;
};

struct SearchNode {
    std::size_t id = 0;
    int depth = 1;
    int branch = 0;
    std::optional<std::size_t> parent;
    std::vector<std::size_t> children;
    CocStep step;
    EvalScore score;

    bool operator==(const SearchNode&) const = default;
};

struct SearchResult {
    std::string item_id;
    CocTrace best_trace;
    std::size_t best_node = 0;
    bool solved = false;
    std::optional<int> solved_depth;
    std::size_t expansions = 0;
    std::vector<CocTrace> negatives;
    std::vector<SearchNode> tree;
    // Completed paths whose judge reply never parsed.
    std::size_t unverifiable = 0;

    bool operator==(const SearchResult&) const = default;
};

// Depth-by-depth tree search over clarification steps.
//
// At each depth the current frontier node spawns `branching` clarifications
// (sample index = branch), identical clarifications among siblings are
// collapsed, and every survivor is completed (pointback, clarification
// answer, final answer) and scored. With early stopping, the first depth
// with a correct candidate ends the search and returns the correct
// candidate with the highest F1 (lowest branch on ties). Otherwise search
// descends greedily from the best candidate of the depth; after max_depth
// the best-scored path of the whole tree wins.
class PathSearch {
public:
    PathSearch(Gateway& worker, Scorer& scorer, const PromptTemplates& templates, SearchConfig config);

    // tree_log, when given, receives expand/score/select/stop events.
    SearchResult search(const QAItem& item, const Document& doc, JsonlWriter* tree_log = nullptr);

    const SearchConfig& config() const { return config_; }
    void set_warning_sink(WarningSink sink) { warn_ = std::move(sink); }

private:
    Gateway& worker_;
    Scorer& scorer_;
    const PromptTemplates& templates_;
    SearchConfig config_;
    WarningSink warn_;
};

// Answer recall after each round: r <- r + (1 - r) * p_k starting from 0.
// Throws DomainError for a rate outside [0, 1].
double cumulative_recall(std::span<const double> round_rates);

// Per-item checkpoint files under a run directory:
//   results/<item>.json  finished SearchResult (written atomically)
//   tree/<item>.jsonl    tree log of the latest attempt
// Model calls are replayed through the gateways' call logs, so a resumed
// search re-issues no completed call.
class SearchCheckpoint {
public:
    explicit SearchCheckpoint(std::filesystem::path run_dir);

    std::optional<SearchResult> load(const std::string& item_id) const;
    void save(const SearchResult& result) const;

    std::filesystem::path tree_log_path(const std::string& item_id) const;
    std::filesystem::path result_path(const std::string& item_id) const;

    // Loads a finished result, or runs the search with a fresh tree log and
    // saves the outcome.
    SearchResult run(PathSearch& search, const QAItem& item, const Document& doc) const;

private:
    std::filesystem::path run_dir_;
};

// File-system safe form of an item id.
std::string safe_file_stem(const std::string& id);

void to_json(nlohmann::json& j, const SearchConfig& c);
void to_json(nlohmann::json& j, const SearchNode& n);
void from_json(const nlohmann::json& j, SearchNode& n);
void to_json(nlohmann::json& j, const SearchResult& r);
void from_json(const nlohmann::json& j, SearchResult& r);

}  // namespace coc
