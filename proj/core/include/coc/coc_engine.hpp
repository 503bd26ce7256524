#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coc/corpus.hpp"
#include "coc/llm_gateway.hpp"
#include "coc/prompts.hpp"
#include "coc/scoring.hpp"

namespace coc {

enum class PointbackMode { iterative_pointback, direct_pointback };

std::string_view to_string(PointbackMode mode);
PointbackMode pointback_mode_from_string(std::string_view name);

enum class Ablation { no_clarification, no_pointback };

std::string_view to_string(Ablation ablation);
Ablation ablation_from_string(std::string_view name);

struct CocConfig {
    PointbackMode pointback_mode = PointbackMode::direct_pointback;
    bool allow_empty_grounding = true;
    std::set<Ablation> ablations;
    // In-call fan-out for iterative pointback relevance queries.
    std::size_t relevance_concurrency = 1;
};

struct CocStep {
    std::string clarification;
    std::vector<int> pointback_indices;
    std::string clarification_answer;
    std::string final_answer;
    PointbackMode mode = PointbackMode::direct_pointback;
    // Iterative pointback: chunks whose relevance reply stayed unparseable.
    std::vector<int> undetermined_indices;

    bool operator==(const CocStep&) const = default;
};

// A chat session plus the workflow stage of every message in it.
struct CocSession {
    ChatSession chat;
    std::vector<Stage> stages;
    // Original question; the relevance target when clarification is ablated.
    std::string question;

    void append(ChatMessage message, Stage stage);
};

struct CocTrace {
    std::string item_id;
    std::vector<CocStep> steps;
    std::string final_answer;
    std::optional<EvalScore> score;
    std::vector<ChatMessage> transcript;
    std::vector<Stage> stages;

    bool operator==(const CocTrace&) const = default;
};

// Checks the transcript grammar: system, context, then (user, assistant)
// pairs whose stages follow raise_question -> pointback ->
// answer_clarification per round (ablations delete whole pairs) and end
// with exactly one final_answer pair. Returns an empty string when valid,
// otherwise a description of the first violation.
std::string check_transcript_grammar(const std::vector<ChatMessage>& transcript,
                                     const std::vector<Stage>& stages);

using WarningSink = std::function<void(const std::string&)>;

// One Chain-of-Clarifications cycle and its building blocks. Each stage
// picks its template variant from (seed, stage, round) so the same inputs
// always produce the same prompts.
class CocEngine {
public:
    CocEngine(Gateway& gateway, const PromptTemplates& templates, CocConfig config = {});

    const CocConfig& config() const { return config_; }
    void set_warning_sink(WarningSink sink) { warn_ = std::move(sink); }
    // Ledger charged by every call; the gateway's own ledger when null.
    void set_ledger(TokenLedger* ledger) { ledger_ = ledger; }

    // system prompt + "<para 1> ... </para n>\n{question}"
    CocSession open_session(const QAItem& item, const std::vector<Chunk>& chunks,
                            std::uint64_t seed) const;

    std::string raise_clarification(CocSession& session, std::uint64_t seed, std::uint64_t round,
                                    const CallOptions& options = {});

    // One yes/no relevance query per chunk, each in its own two-message
    // session. Unparseable replies are asked once more, then the chunk is
    // reported as undetermined and left out.
    std::vector<int> pointback_iterative(const std::string& clarification,
                                         const std::vector<Chunk>& chunks,
                                         const CallOptions& options = {},
                                         std::vector<int>* undetermined = nullptr);

    // Sends the pointback prompt and parses paragraph references out of the
    // reply. Throws EmptyPointback when the reply has none.
    std::vector<int> pointback_direct(CocSession& session, int doc_chunk_count, std::uint64_t seed,
                                      std::uint64_t round, const CallOptions& options = {});

    // Records iterative pointback results in the transcript as a pointback
    // prompt answered with the selected paragraph tags.
    void record_pointback(CocSession& session, const std::vector<int>& indices, std::uint64_t seed,
                          std::uint64_t round) const;

    // Re-presents the selected chunks in ascending order with the
    // answer-clarification prompt. With no chunks the prompt goes alone.
    std::string answer_clarification(CocSession& session, const std::vector<int>& pointback_indices,
                                     const std::vector<Chunk>& chunks, std::uint64_t seed,
                                     std::uint64_t round, const CallOptions& options = {});

    // Final-answer turn. Extra chunks (used when clarification is ablated
    // away) are re-presented ahead of the prompt.
    std::string answer_original(CocSession& session, std::uint64_t seed, std::uint64_t round,
                                const CallOptions& options = {},
                                const std::vector<int>& grounding = {},
                                const std::vector<Chunk>& chunks = {});

    // raise -> pointback -> answer for one round, honouring the ablations
    // and the configured pointback mode. Does not produce the final answer.
    CocStep run_cycle(CocSession& session, const std::vector<Chunk>& chunks, std::uint64_t seed,
                      std::uint64_t round, const CallOptions& options = {});

    // The part of a cycle after the clarifying question: pointback and the
    // clarification answer. `clarification` is empty when ablated.
    CocStep complete_cycle(CocSession& session, std::string clarification, const std::vector<Chunk>& chunks,
                           std::uint64_t seed, std::uint64_t round, const CallOptions& options = {});

    // Runs `rounds` cycles in one session, then answers the original
    // question.
    CocTrace run_inference(const QAItem& item, const std::vector<Chunk>& chunks, int rounds,
                           std::uint64_t seed);

private:
    void warn(const std::string& message) const;
    std::string ask(CocSession& session, std::string prompt, Stage stage, const CallOptions& options);
    ChatMessage call(ChatSession& session, std::string prompt, const CallOptions& options);
    std::optional<bool> relevance(const Chunk& chunk, const std::string& target, const CallOptions& options);

    Gateway& gateway_;
    const PromptTemplates& templates_;
    CocConfig config_;
    WarningSink warn_;
    TokenLedger* ledger_ = nullptr;
};

// Tag rendering of the chunks with the given indices, in ascending order.
std::string render_selected(const std::vector<Chunk>& chunks, const std::vector<int>& indices);

void to_json(nlohmann::json& j, const CocStep& step);
void from_json(const nlohmann::json& j, CocStep& step);
void to_json(nlohmann::json& j, const CocTrace& trace);
void from_json(const nlohmann::json& j, CocTrace& trace);

}  // namespace coc
