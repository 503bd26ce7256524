#include "coc/prompts.hpp"

#include <fstream>

#include "coc/errors.hpp"
#include "coc/jsonl.hpp"
#include "coc/rng.hpp"

namespace coc {

namespace {

constexpr std::array<std::string_view, kStageCount> kStageNames = {
    "system", "context", "raise_question", "pointback", "answer_clarification", "final_answer", "relevance",
};

std::size_t index_of(Stage stage) { return static_cast<std::size_t>(stage); }

}  // namespace

std::string_view to_string(Stage stage) { return kStageNames[index_of(stage)]; }

Stage stage_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kStageNames.size(); ++i) {
        if (kStageNames[i] == name) {
            return static_cast<Stage>(i);
        }
    }
    throw ConfigError("unknown prompt stage '" + std::string(name) + "'");
}

PromptTemplates PromptTemplates::builtin() {
    PromptTemplates t;
    t.set_variants(Stage::system,
                   {
                       "You are an AI assistant specialized in long context reasoning. Analyze information "
                       "thoroughly while maintaining clarity and focus. Track the full context of conversations, "
                       "building connections between concepts and flagging when context review is needed. Break "
                       "down complex problems into components, showing your reasoning steps and stating key "
                       "assumptions. Structure your responses with clear headers and periodic summaries. Present "
                       "evidence for your conclusions, acknowledge uncertainties, and request clarification when "
                       "needed. Keep your analysis organized, explicit, and focused on addressing the core question.",
                       "You are an assistant that reasons carefully over long documents. Keep track of what has "
                       "been said so far, connect related passages, and say when you need to look back at the "
                       "context. Show your reasoning, state your assumptions, and back conclusions with evidence "
                       "from the text.",
                       "You help users answer questions about long texts. Read closely, relate details that are "
                       "far apart, and ask for clarification when something is unclear. Keep answers organized "
                       "and grounded in the provided paragraphs.",
                       "You are a reading assistant for very long contexts. Break hard questions into smaller "
                       "ones, cite the passages you rely on, note any uncertainty, and stay focused on the "
                       "question being asked.",
                   });
    t.set_variants(Stage::raise_question,
                   {
                       "In order to answer this question, ask one question about what you want to know in order "
                       "to better answer it.",
                       "Before answering, ask one clarifying question whose answer would help you respond more "
                       "accurately.",
                       "To better answer the question above, first ask one question about what you still need "
                       "to know.",
                       "Pose one question about the information you still need before answering.",
                   });
    t.set_variants(Stage::pointback,
                   {
                       "Help me find relevant context to answer the previous clarifying question.",
                       "Point to the paragraphs that are relevant to the previous clarifying question.",
                       "Which paragraphs contain the context needed to answer the previous clarifying question?",
                       "List the paragraph numbers relevant to the previous clarifying question.",
                   });
    t.set_variants(Stage::answer_clarification,
                   {
                       "Based on the relevant context, answer the previous clarifying question.",
                       "Using the context above, answer the clarifying question you asked.",
                       "Answer your clarifying question using the relevant paragraphs.",
                       "Given the highlighted context, answer the previous clarifying question.",
                   });
    t.set_variants(Stage::final_answer,
                   {
                       "Now, let's answer the final question. Be concise in your answer.",
                       "Now answer the original question. Be concise in your answer.",
                       "With these clarifications, answer the original question concisely.",
                       "Give a concise final answer to the original question.",
                   });
    t.set_variants(Stage::relevance,
                   {"Is this paragraph relevant to the question \"{clarification}\"? Answer yes or no."});
    return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
    PromptTemplates t = builtin();
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError(path.string() + ": prompt templates must be a JSON object");
    }
    for (const auto& [key, value] : doc.items()) {
        const Stage stage = stage_from_string(key);
        if (stage == Stage::context) {
            throw ConfigError(path.string() + ": stage 'context' has no template");
        }
        if (!value.is_array() || value.empty()) {
            throw ConfigError(path.string() + ": '" + key + "' must be a nonempty array of strings");
        }
        std::vector<std::string> pool;
        for (const auto& v : value) {
            if (!v.is_string() || v.get<std::string>().empty()) {
                throw ConfigError(path.string() + ": '" + key + "' must contain nonempty strings");
            }
            pool.push_back(v.get<std::string>());
        }
        if (stage == Stage::relevance) {
            for (const auto& p : pool) {
                if (p.find("{clarification}") == std::string::npos) {
                    throw ConfigError(path.string() + ": relevance template lacks {clarification}");
                }
            }
        }
        t.set_variants(stage, std::move(pool));
    }
    return t;
}

void PromptTemplates::limit_pool_size(std::size_t n) {
    if (n == 0) {
        throw ConfigError("template pool size must be at least 1");
    }
    for (auto& pool : pools_) {
        if (pool.size() > n) {
            pool.resize(n);
        }
    }
}

const std::vector<std::string>& PromptTemplates::variants(Stage stage) const { return pools_[index_of(stage)]; }

void PromptTemplates::set_variants(Stage stage, std::vector<std::string> variants) {
    pools_[index_of(stage)] = std::move(variants);
}

const std::string& PromptTemplates::select(Stage stage, std::uint64_t seed, std::uint64_t round) const {
    const auto& pool = variants(stage);
    if (pool.empty()) {
        throw ConfigError("no prompt variants for stage '" + std::string(to_string(stage)) + "'");
    }
    if (pool.size() == 1) {
        return pool.front();
    }
    const auto pick = derive_seed(seed, {static_cast<std::uint64_t>(index_of(stage)), round}) % pool.size();
    return pool[pick];
}

std::string render_relevance_prompt(std::string_view paragraph_block, std::string_view templ,
                                    std::string_view clarification) {
    std::string question(templ);
    constexpr std::string_view slot = "{clarification}";
    if (const auto at = question.find(slot); at != std::string::npos) {
        question.replace(at, slot.size(), clarification);
    }
    std::string out(paragraph_block);
    out += "\n\n";
    out += question;
    return out;
}

}  // namespace coc
