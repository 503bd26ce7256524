#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "coc/jsonl.hpp"

namespace coc {

// Append-only JSONL record of completed model calls. Each line carries a
// digest of its own contents so that edits are detected on reload. When
// opened on an existing file, the recorded replies are replayed for
// identical requests instead of calling the backend again.
class CallLog {
public:
    struct Entry {
        std::string key;
        std::string session_id;
        std::string last_user;
        std::string reply;
        std::uint64_t prompt_tokens = 0;
        std::uint64_t cached_tokens = 0;
        std::uint64_t generated_tokens = 0;
    };

    // Loads any existing entries (throws ResumeError on a corrupted line)
    // and opens the file for appending.
    explicit CallLog(const std::filesystem::path& path);

    // Pops the next recorded reply for key, if any.
    std::optional<std::string> take_replay(const std::string& key);

    void append(const Entry& entry);

    std::size_t loaded_entries() const { return loaded_; }
    const std::filesystem::path& path() const { return writer_->path(); }

private:
    std::mutex mutex_;
    std::map<std::string, std::deque<std::string>> replay_;
    std::size_t loaded_ = 0;
    std::unique_ptr<JsonlWriter> writer_;
};

// Reads and verifies a call log without opening it for writing.
std::vector<CallLog::Entry> read_call_log(const std::filesystem::path& path);

}  // namespace coc
