#pragma once

#include <filesystem>
#include <memory>
#include <ostream>
#include <string>

#include "coc/call_log.hpp"
#include "coc/llm_gateway.hpp"
#include "coc/prompts.hpp"
#include "coc/run_config.hpp"

namespace coc::cli {

inline std::unique_ptr<Gateway> open_gateway(const BackendConfig& config, std::size_t concurrency,
                                             const std::filesystem::path& call_log) {
    std::shared_ptr<ChatBackend> backend = make_backend(config);
    auto gateway = std::make_unique<Gateway>(backend, config, default_tokenizer(), concurrency);
    gateway->attach_call_log(std::make_shared<CallLog>(call_log));
    return gateway;
}

inline PromptTemplates load_templates(const RunConfig& config) {
    PromptTemplates t = config.templates_path ? PromptTemplates::load(*config.templates_path) : PromptTemplates::builtin();
    t.limit_pool_size(config.template_pool_size);
    return t;
}

// Removes a file the run is about to regenerate; never touches anything
// else in the directory.
inline void remove_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (std::filesystem::is_directory(path, ec)) {
        std::filesystem::remove_all(path, ec);
    } else {
        std::filesystem::remove(path, ec);
    }
}

}  // namespace coc::cli
