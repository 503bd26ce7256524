#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <string_view>

#include "coc/llm_gateway.hpp"
#include "coc/scripted_backend.hpp"

namespace coc::test {

inline std::filesystem::path data_dir() { return COC_DATA_DIR; }
inline std::filesystem::path docs_dir() { return COC_DOCS_DIR; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(std::string_view tag = "coc") {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (std::string(tag) + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Backend driven by a callback, for tests that need to count or fail calls.
class FnBackend final : public ChatBackend {
public:
    using Fn = std::function<std::string(const CompletionRequest&)>;
    explicit FnBackend(Fn fn) : fn_(std::move(fn)) {}
    std::string complete(const CompletionRequest& request) override {
        ++calls;
        return fn_(request);
    }
    std::atomic<int> calls{0};

private:
    Fn fn_;
};

inline BackendConfig mock_config(std::string model = "mock") {
    BackendConfig c;
    c.kind = BackendKind::scripted_mock;
    c.script = "inline";
    c.model_name = std::move(model);
    c.retry.base_backoff_ms = 0;
    return c;
}

inline std::shared_ptr<ChatBackend> script_backend(std::string_view script) {
    return std::make_shared<ScriptedBackend>(parse_script(script));
}

inline std::shared_ptr<ChatBackend> script_file_backend(const std::filesystem::path& path) {
    return std::make_shared<ScriptedBackend>(load_script(path));
}

inline std::unique_ptr<Gateway> scripted_gateway(std::string_view script, std::string model = "mock") {
    return std::make_unique<Gateway>(script_backend(script), mock_config(std::move(model)));
}

inline std::unique_ptr<Gateway> scripted_file_gateway(const std::filesystem::path& path, std::string model = "mock") {
    return std::make_unique<Gateway>(script_file_backend(path), mock_config(std::move(model)));
}

}  // namespace coc::test
