#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace coc {

using json = nlohmann::json;

// Calls fn(value, line_number) for every non-blank line. Parse failures are
// reported through on_error(message, line_number), which is expected to throw.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn,
                    const std::function<void(const std::string&, std::size_t)>& on_error);

std::vector<json> read_jsonl(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

// Writes via a temporary sibling and renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// Thread-safe line appender.
class JsonlWriter {
public:
    JsonlWriter() = default;
    explicit JsonlWriter(const std::filesystem::path& path, bool append = true);

    bool is_open() const { return out_.is_open(); }
    void write(const json& value);
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::mutex mutex_;
};

}  // namespace coc
