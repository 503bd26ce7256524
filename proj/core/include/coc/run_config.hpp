#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "coc/llm_gateway.hpp"
#include "coc/path_search.hpp"

namespace coc {

// Everything a generate/evaluate run needs. Parsed from JSON; unknown keys
// are rejected so typos fail before any model call.
struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t chunk_size = kDefaultChunkSize;
    std::size_t concurrency = 4;
    std::filesystem::path run_dir = "runs/default";
    SearchConfig search;
    BackendConfig worker;
    BackendConfig judge;
    std::optional<std::filesystem::path> templates_path;
    std::size_t template_pool_size = 4;
    bool allow_empty_grounding = true;
    std::size_t dpo_cap_per_item = 8;

    // Pushes seed, chunk size, concurrency and grounding policy into the
    // search config and validates everything. Throws ConfigError.
    void finalize();
};

// Relative script and template paths resolve against base_dir.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

}  // namespace coc
