#pragma once

#include <compare>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coc/corpus.hpp"
#include "coc/jsonl.hpp"
#include "coc/llm_gateway.hpp"

namespace coc {

struct RougeLScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const RougeLScore&) const = default;
};

// Lowercased alphanumeric runs; everything else separates tokens.
std::vector<std::string> rouge_tokenize(std::string_view text);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

RougeLScore rouge_l_tokens(std::span<const std::string> candidate,
                           std::span<const std::string> reference);

// Token-level LCS precision/recall/F1. Empty candidate or reference scores 0.
RougeLScore rouge_l(std::string_view candidate, std::string_view reference);

struct JudgeVerdict {
    std::string explanation;
    double confidence = 0.0;
    bool correct = false;

    bool operator==(const JudgeVerdict&) const = default;
};

// Correctness first, then F1. Any correct candidate outranks any incorrect
// one.
struct CombinedScore {
    int correct = 0;
    double f1 = 0.0;

    bool operator==(const CombinedScore&) const = default;
    std::partial_ordering operator<=>(const CombinedScore& other) const {
        if (auto c = correct <=> other.correct; c != 0) {
            return c;
        }
        return f1 <=> other.f1;
    }
};

struct EvalScore {
    RougeLScore rouge_l;
    // Empty when the judge reply could not be parsed; such a candidate
    // counts as incorrect.
    std::optional<JudgeVerdict> verdict;
    CombinedScore combined;

    bool verifiable() const { return verdict.has_value(); }
    bool correct() const { return verdict && verdict->correct; }
    bool operator==(const EvalScore&) const = default;
};

// Verbatim grading template plus the JSON-object instruction.
std::string render_judge_prompt(std::string_view question, std::span<const std::string> gold_answers,
                                std::string_view predicted);

// Pulls the first balanced JSON object out of reply (prose around it is
// ignored) and checks the VerificationResult fields. Throws JudgeParseError.
JudgeVerdict parse_judge_reply(const std::string& reply);

struct JudgeOutcome {
    JudgeVerdict verdict;
    std::string raw_reply;
};

// Sends the grading prompt to the judge; reprompts once on an unparseable
// reply and then throws JudgeParseError.
JudgeOutcome judge(std::string_view question, std::span<const std::string> gold_answers,
                   std::string_view predicted, Gateway& gateway);

// Judges candidates with at most one request per (item, candidate) and logs
// each raw reply with its verdict:
//   {"item_id", "candidate_hash", "raw_reply", "verdict": {...} | null}
class Scorer {
public:
    explicit Scorer(Gateway& judge_gateway, std::shared_ptr<JsonlWriter> verdict_log = nullptr);

    // Max-F1 RougeL over the gold answers plus the judge verdict.
    // Propagates JudgeParseError.
    EvalScore score_answer(const QAItem& item, const std::string& predicted);

    // Like score_answer, but an unparseable judge reply yields an EvalScore
    // without verdict instead of throwing.
    EvalScore score_or_unverifiable(const QAItem& item, const std::string& predicted);

    std::size_t judge_requests() const { return judge_requests_; }

private:
    struct CacheEntry {
        std::optional<JudgeVerdict> verdict;
        std::string raw_reply;
        std::string error;
    };
    CacheEntry cached_or_judge(const QAItem& item, const std::string& predicted);

    Gateway& gateway_;
    std::shared_ptr<JsonlWriter> verdict_log_;
    std::mutex mutex_;
    std::size_t judge_requests_ = 0;
    std::map<std::pair<std::string, std::string>, std::shared_future<CacheEntry>> cache_;
};

RougeLScore best_rouge_l(std::string_view predicted, std::span<const std::string> gold_answers);

void to_json(nlohmann::json& j, const RougeLScore& s);
void from_json(const nlohmann::json& j, RougeLScore& s);
void to_json(nlohmann::json& j, const JudgeVerdict& v);
void from_json(const nlohmann::json& j, JudgeVerdict& v);
void to_json(nlohmann::json& j, const EvalScore& s);
void from_json(const nlohmann::json& j, EvalScore& s);

}  // namespace coc
