#include "coc/jsonl.hpp"

#include <sstream>

#include "coc/errors.hpp"

namespace coc {

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& fn,
                    const std::function<void(const std::string&, std::size_t)>& on_error) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
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
            on_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what(), line_no);
            continue;
        }
        fn(value, line_no);
    }
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::vector<json> out;
    for_each_jsonl(
        path, [&](const json& v, std::size_t) { out.push_back(v); },
        [](const std::string& msg, std::size_t line) { throw LineError(msg, line); });
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out << contents;
        out.flush();
        if (!out) {
            throw Error("short write to " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path, bool append) : path_(path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    out_.open(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!out_) {
        throw Error("cannot open " + path.string() + " for writing");
    }
}

void JsonlWriter::write(const json& value) {
    const std::string line = value.dump();
    std::lock_guard lock(mutex_);
    out_ << line << '\n';
    out_.flush();
}

}  // namespace coc
