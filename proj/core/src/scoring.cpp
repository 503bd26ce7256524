#include "coc/scoring.hpp"

#include <algorithm>
#include <future>

#include "coc/errors.hpp"
#include "coc/hash.hpp"

namespace coc {

std::vector<std::string> rouge_tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
        if (word) {
            current.push_back(static_cast<char>((c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.empty() || b.empty()) {
        return 0;
    }
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> curr(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

RougeLScore rouge_l_tokens(std::span<const std::string> candidate, std::span<const std::string> reference) {
    RougeLScore s;
    if (candidate.empty() || reference.empty()) {
        return s;
    }
    const auto lcs = static_cast<double>(lcs_length(candidate, reference));
    s.precision = lcs / static_cast<double>(candidate.size());
    s.recall = lcs / static_cast<double>(reference.size());
    if (s.precision + s.recall > 0.0) {
        s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    }
    return s;
}

RougeLScore rouge_l(std::string_view candidate, std::string_view reference) {
    const auto c = rouge_tokenize(candidate);
    const auto r = rouge_tokenize(reference);
    return rouge_l_tokens(c, r);
}

RougeLScore best_rouge_l(std::string_view predicted, std::span<const std::string> gold_answers) {
    const auto cand = rouge_tokenize(predicted);
    RougeLScore best;
    bool first = true;
    for (const auto& gold : gold_answers) {
        const auto ref = rouge_tokenize(gold);
        const auto s = rouge_l_tokens(cand, ref);
        if (first || s.f1 > best.f1) {
            best = s;
            first = false;
        }
    }
    return best;
}

std::string render_judge_prompt(std::string_view question, std::span<const std::string> gold_answers,
                                std::string_view predicted) {
    const std::string golds = json(std::vector<std::string>(gold_answers.begin(), gold_answers.end())).dump();
    std::string p;
    p += "Please verify the following answer:\n\n";
    p += "Question: ";
    p += question;
    p += "\nGround Truth Answers: ";
    p += golds;
    p += "\nPredicted Answer: ";
    p += predicted;
    p += "\n\n";
    p += "Your task is to determine whether the predicted answer correctly matches the ground truth. "
         "Focus on overall correctness and provide a detailed explanation in the following format:\n\n\n";
    p += "class VerificationResult:\n\n";
    p += "    explanation: str   # Justification\n\n";
    p += "    confidence: float  # Confidence score in the range [0,1]\n\n";
    p += "    correct_answer: bool  # True if the prediction is correct, otherwise False\n\n";
    p += "Respond with a single JSON object with the keys \"explanation\", \"confidence\" and \"correct_answer\".";
    return p;
}

namespace {

constexpr std::string_view kJudgeSystem = "You grade answers to reading-comprehension questions.";
constexpr std::string_view kJudgeReprompt =
    "Your reply could not be parsed. Respond with only a JSON object with the keys "
    "\"explanation\" (string), \"confidence\" (number in [0,1]) and \"correct_answer\" (boolean).";

// End of the balanced {...} starting at open, or npos.
std::size_t balanced_end(const std::string& s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) {
                return i;
            }
        }
    }
    return std::string::npos;
}

}  // namespace

JudgeVerdict parse_judge_reply(const std::string& reply) {
    for (std::size_t open = reply.find('{'); open != std::string::npos; open = reply.find('{', open + 1)) {
        const auto close = balanced_end(reply, open);
        if (close == std::string::npos) {
            break;
        }
        json obj;
        try {
            obj = json::parse(reply.substr(open, close - open + 1));
        } catch (const json::parse_error&) {
            continue;
        }
        if (!obj.is_object()) {
            continue;
        }
        const auto expl = obj.find("explanation");
        const auto conf = obj.find("confidence");
        const auto corr = obj.find("correct_answer");
        if (expl == obj.end() || conf == obj.end() || corr == obj.end()) {
            throw JudgeParseError("judge reply lacks explanation/confidence/correct_answer", reply);
        }
        if (!expl->is_string() || expl->get<std::string>().empty()) {
            throw JudgeParseError("judge explanation must be a nonempty string", reply);
        }
        if (!conf->is_number()) {
            throw JudgeParseError("judge confidence must be a number", reply);
        }
        const double c = conf->get<double>();
        if (!(c >= 0.0 && c <= 1.0)) {
            throw JudgeParseError("judge confidence " + std::to_string(c) + " outside [0,1]", reply);
        }
        if (!corr->is_boolean()) {
            throw JudgeParseError("judge correct_answer must be a boolean", reply);
        }
        return JudgeVerdict{expl->get<std::string>(), c, corr->get<bool>()};
    }
    throw JudgeParseError("no JSON object in judge reply", reply);
}

JudgeOutcome judge(std::string_view question, std::span<const std::string> gold_answers, std::string_view predicted,
                   Gateway& gateway) {
    if (gold_answers.empty()) {
        throw Error("judge needs at least one gold answer");
    }
    ChatSession session("judge");
    session.append({Role::system, std::string(kJudgeSystem)});
    const auto first = gateway.complete(session, {Role::user, render_judge_prompt(question, gold_answers, predicted)});
    try {
        return JudgeOutcome{parse_judge_reply(first.content), first.content};
    } catch (const JudgeParseError&) {
    }
    const auto second = gateway.complete(session, {Role::user, std::string(kJudgeReprompt)});
    const std::string raw = first.content + "\n---\n" + second.content;
    try {
        return JudgeOutcome{parse_judge_reply(second.content), raw};
    } catch (const JudgeParseError& e) {
        throw JudgeParseError(e.what(), raw);
    }
}

Scorer::Scorer(Gateway& judge_gateway, std::shared_ptr<JsonlWriter> verdict_log)
    : gateway_(judge_gateway), verdict_log_(std::move(verdict_log)) {}

Scorer::CacheEntry Scorer::cached_or_judge(const QAItem& item, const std::string& predicted) {
    const auto key = std::make_pair(item.id, candidate_hash(predicted));
    std::shared_future<CacheEntry> pending;
    std::promise<CacheEntry> promise;
    bool owner = false;
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            pending = it->second;
        } else {
            pending = promise.get_future().share();
            cache_.emplace(key, pending);
            owner = true;
            ++judge_requests_;
        }
    }
    if (!owner) {
        return pending.get();
    }
    CacheEntry entry;
    try {
        auto outcome = judge(item.question, item.gold_answers, predicted, gateway_);
        entry.verdict = outcome.verdict;
        entry.raw_reply = std::move(outcome.raw_reply);
    } catch (const JudgeParseError& e) {
        entry.raw_reply = e.raw_reply();
        entry.error = e.what();
    } catch (...) {
        {
            std::lock_guard lock(mutex_);
            cache_.erase(key);
        }
        promise.set_exception(std::current_exception());
        throw;
    }
    if (verdict_log_) {
        json line{{"item_id", item.id}, {"candidate_hash", key.second}, {"raw_reply", entry.raw_reply}};
        line["verdict"] = entry.verdict ? json(*entry.verdict) : json(nullptr);
        verdict_log_->write(line);
    }
    promise.set_value(entry);
    return entry;
}

EvalScore Scorer::score_or_unverifiable(const QAItem& item, const std::string& predicted) {
    EvalScore score;
    score.rouge_l = best_rouge_l(predicted, item.gold_answers);
    score.verdict = cached_or_judge(item, predicted).verdict;
    score.combined = CombinedScore{score.correct() ? 1 : 0, score.rouge_l.f1};
    return score;
}

EvalScore Scorer::score_answer(const QAItem& item, const std::string& predicted) {
    EvalScore score;
    score.rouge_l = best_rouge_l(predicted, item.gold_answers);
    const auto entry = cached_or_judge(item, predicted);
    if (!entry.verdict) {
        throw JudgeParseError(entry.error, entry.raw_reply);
    }
    score.verdict = entry.verdict;
    score.combined = CombinedScore{score.correct() ? 1 : 0, score.rouge_l.f1};
    return score;
}

void to_json(nlohmann::json& j, const RougeLScore& s) {
    j = nlohmann::json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

void from_json(const nlohmann::json& j, RougeLScore& s) {
    s.precision = j.at("precision").get<double>();
    s.recall = j.at("recall").get<double>();
    s.f1 = j.at("f1").get<double>();
}

void to_json(nlohmann::json& j, const JudgeVerdict& v) {
    j = nlohmann::json{{"explanation", v.explanation}, {"confidence", v.confidence}, {"correct_answer", v.correct}};
}

void from_json(const nlohmann::json& j, JudgeVerdict& v) {
    v.explanation = j.at("explanation").get<std::string>();
    v.confidence = j.at("confidence").get<double>();
    v.correct = j.at("correct_answer").get<bool>();
}

void to_json(nlohmann::json& j, const EvalScore& s) {
    j = nlohmann::json{{"rouge_l", s.rouge_l},
                       {"verdict", s.verdict ? nlohmann::json(*s.verdict) : nlohmann::json(nullptr)},
                       {"combined", {s.combined.correct, s.combined.f1}}};
}

void from_json(const nlohmann::json& j, EvalScore& s) {
    s.rouge_l = j.at("rouge_l").get<RougeLScore>();
    if (j.at("verdict").is_null()) {
        s.verdict.reset();
    } else {
        s.verdict = j.at("verdict").get<JudgeVerdict>();
    }
    s.combined.correct = j.at("combined").at(0).get<int>();
    s.combined.f1 = j.at("combined").at(1).get<double>();
}

}  // namespace coc
