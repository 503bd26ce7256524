#include "coc/call_log.hpp"

#include <fstream>

#include "coc/errors.hpp"
#include "coc/hash.hpp"

namespace coc {
namespace {

json entry_body(const CallLog::Entry& e) {
    return json{{"key", e.key},
                {"session_id", e.session_id},
                {"last_user", e.last_user},
                {"reply", e.reply},
                {"prompt_tokens", e.prompt_tokens},
                {"cached_tokens", e.cached_tokens},
                {"generated_tokens", e.generated_tokens}};
}

std::string digest_of(const json& body) { return to_hex(fnv1a64(body.dump())); }

// Parses and verifies every complete line. A final line without a newline
// is a torn write from an interrupted run; its offset is reported through
// torn_at so the caller can cut it off.
std::vector<CallLog::Entry> parse_log(const std::filesystem::path& path, std::optional<std::uintmax_t>* torn_at) {
    std::vector<CallLog::Entry> entries;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return entries;
    }
    std::string line;
    std::size_t line_no = 0;
    std::uintmax_t offset = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const bool complete = !in.eof();
        const std::uintmax_t line_start = offset;
        offset += line.size() + 1;
        if (!complete) {
            if (torn_at != nullptr) {
                *torn_at = line_start;
            }
            break;
        }
        if (line.empty()) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_no);
        json value;
        try {
            value = json::parse(line);
        } catch (const json::parse_error&) {
            throw ResumeError(where + ": call log line is not valid JSON", line_no);
        }
        try {
            CallLog::Entry e;
            e.key = value.at("key").get<std::string>();
            e.session_id = value.at("session_id").get<std::string>();
            e.last_user = value.at("last_user").get<std::string>();
            e.reply = value.at("reply").get<std::string>();
            e.prompt_tokens = value.at("prompt_tokens").get<std::uint64_t>();
            e.cached_tokens = value.at("cached_tokens").get<std::uint64_t>();
            e.generated_tokens = value.at("generated_tokens").get<std::uint64_t>();
            if (value.at("digest").get<std::string>() != digest_of(entry_body(e))) {
                throw ResumeError(where + ": call log line digest mismatch (edited or corrupted)", line_no);
            }
            entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw ResumeError(where + ": malformed call log entry: " + ex.what(), line_no);
        }
    }
    return entries;
}

}  // namespace

std::vector<CallLog::Entry> read_call_log(const std::filesystem::path& path) { return parse_log(path, nullptr); }

CallLog::CallLog(const std::filesystem::path& path) {
    std::optional<std::uintmax_t> torn_at;
    auto entries = parse_log(path, &torn_at);
    if (torn_at) {
        std::filesystem::resize_file(path, *torn_at);
    }
    for (auto& e : entries) {
        replay_[e.key].push_back(std::move(e.reply));
    }
    loaded_ = entries.size();
    writer_ = std::make_unique<JsonlWriter>(path, true);
}

std::optional<std::string> CallLog::take_replay(const std::string& key) {
    std::lock_guard lock(mutex_);
    auto it = replay_.find(key);
    if (it == replay_.end() || it->second.empty()) {
        return std::nullopt;
    }
    std::string reply = std::move(it->second.front());
    it->second.pop_front();
    return reply;
}

void CallLog::append(const Entry& entry) {
    json body = entry_body(entry);
    body["digest"] = digest_of(entry_body(entry));
    writer_->write(body);
}

}  // namespace coc
