#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coc/coc_engine.hpp"
#include "coc/corpus.hpp"
#include "coc/llm_gateway.hpp"
#include "coc/path_search.hpp"

namespace coc {

struct SftExample {
    std::vector<ChatMessage> messages;
    std::string item_id;
    int solved_depth = 0;
    // Hash of the final answer, joinable with the verdict log.
    std::string candidate_hash;

    bool operator==(const SftExample&) const = default;
};

enum class DivergenceStage { clarification, pointback, clarification_answer, final_answer };

std::string_view to_string(DivergenceStage stage);
DivergenceStage divergence_stage_from_string(std::string_view name);

struct PreferencePair {
    std::vector<ChatMessage> prompt;
    std::vector<ChatMessage> chosen;
    std::vector<ChatMessage> rejected;
    DivergenceStage divergence_stage = DivergenceStage::final_answer;
    std::string item_id;
    std::string chosen_hash;
    std::string rejected_hash;

    bool operator==(const PreferencePair&) const = default;
};

struct LengthSummary {
    double mean = 0.0;
    std::uint64_t max = 0;

    bool operator==(const LengthSummary&) const = default;
};

struct DatasetStats {
    std::uint64_t num_items = 0;
    std::uint64_t num_sft = 0;
    std::uint64_t num_pairs = 0;
    std::uint64_t skipped_unsolved = 0;
    // Assistant tokens across SFT examples (what the model is trained to
    // generate).
    std::uint64_t total_target_tokens = 0;
    LengthSummary input_len;
    // Fraction of items solved at depth <= d, for d = 1..max_depth.
    std::vector<double> recall_by_depth;

    bool operator==(const DatasetStats&) const = default;
};

// One example per solved item, transcript verbatim. Unsolved items are
// skipped and counted in *skipped. Throws ExportError on a transcript that
// breaks the workflow grammar.
std::vector<SftExample> build_sft(std::span<const SearchResult> results, std::size_t* skipped = nullptr);

// Pairs each solved item's winning trace with up to cap_per_item of its
// negatives. The prompt is the longest common message prefix; pairs whose
// continuations coincide are dropped and reported through warn.
std::vector<PreferencePair> build_dpo(std::span<const SearchResult> results, std::size_t cap_per_item,
                                      const WarningSink& warn = {});

// Longest common prefix length and the stage where the winner diverges.
std::size_t common_prefix_length(const std::vector<ChatMessage>& a, const std::vector<ChatMessage>& b);
DivergenceStage divergence_stage_at(const std::vector<Stage>& stages, std::size_t position);

DatasetStats compute_stats(std::span<const Document> corpus, std::span<const SearchResult> results,
                           std::span<const SftExample> sft, std::span<const PreferencePair> dpo,
                           int max_depth, const Tokenizer& tokenizer = default_tokenizer());

enum class RecipeStage { sft, dpo };

RecipeStage recipe_stage_from_string(std::string_view name);

// Training hyperparameters for the two finetuning stages.
nlohmann::json training_recipe(RecipeStage stage);
void emit_training_recipe(RecipeStage stage, const std::filesystem::path& out_path);

// Embedded JSON schemas (copies ship under docs/schemas).
const nlohmann::json& recipe_schema();
const nlohmann::json& sft_record_schema();
const nlohmann::json& dpo_record_schema();
const nlohmann::json& stats_schema();

nlohmann::json sft_to_json(const SftExample& example);
SftExample sft_from_json(const nlohmann::json& j);
nlohmann::json dpo_to_json(const PreferencePair& pair);
PreferencePair dpo_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const DatasetStats& stats);
void from_json(const nlohmann::json& j, DatasetStats& stats);

std::string to_jsonl(std::span<const SftExample> examples);
std::string to_jsonl(std::span<const PreferencePair> pairs);

// (item_id, candidate_hash) -> correct, from a verdicts.jsonl file. Entries
// whose verdict is null are absent.
using VerdictIndex = std::map<std::pair<std::string, std::string>, bool>;
VerdictIndex load_verdict_index(const std::filesystem::path& path);

enum class ArtifactKind { sft, dpo, stats, recipe };

std::optional<ArtifactKind> guess_artifact_kind(const std::filesystem::path& path);
ArtifactKind artifact_kind_from_string(std::string_view name);

// Schema plus semantic checks for an exported file. verdicts, when given,
// is used to re-join SFT and DPO records with the judge's decisions.
// Returns human-readable violations; empty means valid.
std::vector<std::string> validate_artifact(const std::filesystem::path& path, ArtifactKind kind,
                                           const VerdictIndex* verdicts = nullptr);

}  // namespace coc
