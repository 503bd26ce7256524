#include "coc/scripted_backend.hpp"

#include <sstream>

#include "coc/errors.hpp"
#include "coc/jsonl.hpp"

namespace coc {
namespace {

std::regex compile(const std::string& source, std::size_t line, const char* field) {
    try {
        return std::regex(source, std::regex::ECMAScript | std::regex::icase);
    } catch (const std::regex_error& e) {
        throw ScriptParseError("script line " + std::to_string(line) + ": bad " + field + ": " + e.what(), line);
    }
}

ScriptRule parse_rule(const json& value, std::size_t line) {
    auto fail = [line](const std::string& why) -> ScriptParseError {
        return ScriptParseError("script line " + std::to_string(line) + ": " + why, line);
    };
    if (!value.is_object()) {
        throw fail("expected a JSON object");
    }
    ScriptRule rule;
    rule.line = line;
    for (const auto& [key, v] : value.items()) {
        if (key != "match" && key != "reply" && key != "replies") {
            throw fail("unknown key '" + key + "'");
        }
    }
    if (!value.contains("match") || !value.at("match").is_object()) {
        throw fail("missing \"match\" object");
    }
    for (const auto& [key, v] : value.at("match").items()) {
        if (key == "ordinal") {
            if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
                throw fail("ordinal must be a positive integer");
            }
            rule.ordinal = v.get<std::size_t>();
        } else if (key == "regex") {
            if (!v.is_string()) {
                throw fail("regex must be a string");
            }
            rule.regex_source = v.get<std::string>();
            rule.regex = compile(*rule.regex_source, line, "regex");
        } else if (key == "history_regex") {
            if (!v.is_string()) {
                throw fail("history_regex must be a string");
            }
            rule.history_regex_source = v.get<std::string>();
            rule.history_regex = compile(*rule.history_regex_source, line, "history_regex");
        } else {
            throw fail("unknown match key '" + key + "'");
        }
    }
    const bool has_reply = value.contains("reply");
    const bool has_replies = value.contains("replies");
    if (has_reply == has_replies) {
        throw fail("exactly one of \"reply\" and \"replies\" is required");
    }
    if (has_reply) {
        if (!value.at("reply").is_string()) {
            throw fail("reply must be a string");
        }
        rule.replies.push_back(value.at("reply").get<std::string>());
    } else {
        const auto& list = value.at("replies");
        if (!list.is_array() || list.empty()) {
            throw fail("replies must be a nonempty array of strings");
        }
        for (const auto& r : list) {
            if (!r.is_string()) {
                throw fail("replies must be a nonempty array of strings");
            }
            rule.replies.push_back(r.get<std::string>());
        }
    }
    return rule;
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules) {
    // Stable partition keeps declaration order inside each priority class.
    for (auto& r : rules) {
        if (r.has_regex()) {
            rules_.push_back(std::move(r));
        }
    }
    for (auto& r : rules) {
        if (!r.has_regex()) {
            rules_.push_back(std::move(r));
        }
    }
}

std::string ScriptedBackend::complete(const CompletionRequest& request) {
    std::size_t last_user = request.messages.size();
    std::size_t assistant_turns = 0;
    for (std::size_t i = 0; i < request.messages.size(); ++i) {
        if (request.messages[i].role == Role::user) {
            last_user = i;
        } else if (request.messages[i].role == Role::assistant) {
            ++assistant_turns;
        }
    }
    const std::string empty;
    const std::string& user_text = last_user < request.messages.size() ? request.messages[last_user].content : empty;
    const std::size_t ordinal = assistant_turns + 1;

    std::optional<std::string> history;
    auto history_text = [&]() -> const std::string& {
        if (!history) {
            history.emplace();
            for (std::size_t i = 0; i < last_user && i < request.messages.size(); ++i) {
                if (i > 0) {
                    *history += '\n';
                }
                *history += request.messages[i].content;
            }
        }
        return *history;
    };

    for (const auto& rule : rules_) {
        if (rule.ordinal && *rule.ordinal != ordinal) {
            continue;
        }
        if (rule.regex && !std::regex_search(user_text, *rule.regex)) {
            continue;
        }
        if (rule.history_regex && !std::regex_search(history_text(), *rule.history_regex)) {
            continue;
        }
        return rule.replies[request.sample_index % rule.replies.size()];
    }
    throw ScriptExhausted("no script rule matches turn " + std::to_string(ordinal) + " (last user message: \"" +
                          user_text.substr(0, 80) + "\")");
}

ScriptedBackend parse_script(std::string_view text) {
    std::vector<ScriptRule> rules;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        json value;
        try {
            value = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ScriptParseError("script line " + std::to_string(line_no) + ": " + e.what(), line_no);
        }
        rules.push_back(parse_rule(value, line_no));
    }
    if (rules.empty()) {
        throw ScriptParseError("script has no rules", line_no == 0 ? 1 : line_no);
    }
    return ScriptedBackend(std::move(rules));
}

ScriptedBackend load_script(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const Error& e) {
        throw ScriptParseError(e.what(), 0);
    }
    return parse_script(text);
}

}  // namespace coc
