#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "coc/llm_gateway.hpp"

namespace coc {

// One line of a mock script:
//   {"match": {"ordinal": 2}, "reply": "..."}
//   {"match": {"regex": "one question", "history_regex": "Aunt"}, "replies": ["a", "b"]}
//
// "regex" is searched in the last user message, "history_regex" in all
// earlier messages joined by newlines, "ordinal" is the 1-based assistant
// turn within the session. Every condition present must hold. Matching is
// case-insensitive (ECMAScript syntax). With "replies", the request's
// sample_index picks the reply modulo the list size.
struct ScriptRule {
    std::size_t line = 0;
    std::optional<std::size_t> ordinal;
    std::optional<std::string> regex_source;
    std::optional<std::regex> regex;
    std::optional<std::string> history_regex_source;
    std::optional<std::regex> history_regex;
    std::vector<std::string> replies;

    bool has_regex() const { return regex.has_value() || history_regex.has_value(); }
};

// Deterministic stand-in for a model. Rules with a regex condition take
// priority over ordinal-only rules; within a class the first declared rule
// that matches wins. No match throws ScriptExhausted. Stateless, so it is
// safe to share between threads and sessions.
class ScriptedBackend final : public ChatBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptRule> rules);

    std::string complete(const CompletionRequest& request) override;

    const std::vector<ScriptRule>& rules() const { return rules_; }

private:
    std::vector<ScriptRule> rules_;
};

// Throws ScriptParseError with the offending line number; an empty script
// is an error too.
ScriptedBackend load_script(const std::filesystem::path& path);
ScriptedBackend parse_script(std::string_view text);

}  // namespace coc
