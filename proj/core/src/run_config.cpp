#include "coc/run_config.hpp"

#include <set>

#include "coc/errors.hpp"
#include "coc/jsonl.hpp"

namespace coc {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + " must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

std::filesystem::path resolve(const std::filesystem::path& p, const std::filesystem::path& base) {
    if (p.empty() || p.is_absolute()) {
        return p;
    }
    return std::filesystem::absolute(base / p).lexically_normal();
}

BackendKind backend_kind_from_string(const std::string& name) {
    if (name == "scripted_mock" || name == "scripted") {
        return BackendKind::scripted_mock;
    }
    if (name == "http_provider" || name == "http") {
        return BackendKind::http_provider;
    }
    throw ConfigError("unknown backend kind '" + name + "' (expected scripted_mock or http_provider)");
}

std::string_view backend_kind_name(BackendKind kind) {
    return kind == BackendKind::scripted_mock ? "scripted_mock" : "http_provider";
}

BackendConfig parse_backend(const json& j, const std::string& where, const std::filesystem::path& base) {
    reject_unknown(j,
                   {"kind", "endpoint", "model_name", "max_context_tokens", "temperature", "retry", "api_key_env",
                    "script", "timeout_seconds"},
                   where);
    BackendConfig c;
    if (j.contains("kind")) c.kind = backend_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("endpoint")) c.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("model_name")) c.model_name = j.at("model_name").get<std::string>();
    if (j.contains("max_context_tokens")) c.max_context_tokens = j.at("max_context_tokens").get<std::size_t>();
    if (j.contains("temperature")) c.temperature = j.at("temperature").get<double>();
    if (j.contains("api_key_env")) c.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("script")) c.script = resolve(j.at("script").get<std::string>(), base);
    if (j.contains("timeout_seconds")) c.timeout_seconds = j.at("timeout_seconds").get<int>();
    if (j.contains("retry")) {
        const auto& r = j.at("retry");
        reject_unknown(r, {"max_attempts", "base_backoff_ms"}, where + ".retry");
        if (r.contains("max_attempts")) c.retry.max_attempts = r.at("max_attempts").get<int>();
        if (r.contains("base_backoff_ms")) c.retry.base_backoff_ms = r.at("base_backoff_ms").get<int>();
    }
    return c;
}

json backend_json(const BackendConfig& c) {
    return json{{"kind", backend_kind_name(c.kind)},
                {"endpoint", c.endpoint},
                {"model_name", c.model_name},
                {"max_context_tokens", c.max_context_tokens},
                {"temperature", c.temperature},
                {"retry", {{"max_attempts", c.retry.max_attempts}, {"base_backoff_ms", c.retry.base_backoff_ms}}},
                {"api_key_env", c.api_key_env},
                {"script", c.script.generic_string()},
                {"timeout_seconds", c.timeout_seconds}};
}

}  // namespace

void RunConfig::finalize() {
    if (chunk_size == 0) {
        throw ConfigError("chunk_size must be positive");
    }
    if (concurrency == 0) {
        throw ConfigError("concurrency must be positive");
    }
    if (template_pool_size == 0) {
        throw ConfigError("template_pool_size must be at least 1");
    }
    search.seed = seed;
    search.chunk_size = chunk_size;
    search.concurrency = concurrency;
    search.allow_empty_grounding = allow_empty_grounding;
    search.validate();
    worker.validate();
    judge.validate();
}

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    RunConfig c;
    try {
        reject_unknown(j,
                       {"seed", "chunk_size", "concurrency", "run_dir", "search", "worker", "judge", "templates",
                        "template_pool_size", "allow_empty_grounding", "dpo_cap_per_item"},
                       "config");
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("chunk_size")) c.chunk_size = j.at("chunk_size").get<std::size_t>();
        if (j.contains("concurrency")) c.concurrency = j.at("concurrency").get<std::size_t>();
        if (j.contains("run_dir")) c.run_dir = j.at("run_dir").get<std::string>();
        if (j.contains("templates")) c.templates_path = resolve(j.at("templates").get<std::string>(), base_dir);
        if (j.contains("template_pool_size")) c.template_pool_size = j.at("template_pool_size").get<std::size_t>();
        if (j.contains("allow_empty_grounding")) c.allow_empty_grounding = j.at("allow_empty_grounding").get<bool>();
        if (j.contains("dpo_cap_per_item")) c.dpo_cap_per_item = j.at("dpo_cap_per_item").get<std::size_t>();
        if (j.contains("search")) {
            const auto& s = j.at("search");
            reject_unknown(s, {"branching", "max_depth", "early_stop_on_correct", "negatives_cap", "pointback_mode"},
                           "config.search");
            if (s.contains("branching")) c.search.branching = s.at("branching").get<int>();
            if (s.contains("max_depth")) c.search.max_depth = s.at("max_depth").get<int>();
            if (s.contains("early_stop_on_correct")) {
                c.search.early_stop_on_correct = s.at("early_stop_on_correct").get<bool>();
            }
            if (s.contains("negatives_cap")) c.search.negatives_cap = s.at("negatives_cap").get<std::size_t>();
            if (s.contains("pointback_mode")) {
                c.search.pointback_mode = pointback_mode_from_string(s.at("pointback_mode").get<std::string>());
            }
        }
        if (!j.contains("worker")) {
            throw ConfigError("config: missing 'worker' backend");
        }
        c.worker = parse_backend(j.at("worker"), "config.worker", base_dir);
        c.judge = j.contains("judge") ? parse_backend(j.at("judge"), "config.judge", base_dir) : c.worker;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    } catch (const std::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    try {
        return parse_run_config(j, std::filesystem::absolute(path).parent_path());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

nlohmann::json to_json(const RunConfig& c) {
    json j{{"seed", c.seed},
           {"chunk_size", c.chunk_size},
           {"concurrency", c.concurrency},
           {"run_dir", c.run_dir.generic_string()},
           {"search",
            {{"branching", c.search.branching},
             {"max_depth", c.search.max_depth},
             {"early_stop_on_correct", c.search.early_stop_on_correct},
             {"negatives_cap", c.search.negatives_cap},
             {"pointback_mode", to_string(c.search.pointback_mode)}}},
           {"worker", backend_json(c.worker)},
           {"judge", backend_json(c.judge)},
           {"template_pool_size", c.template_pool_size},
           {"allow_empty_grounding", c.allow_empty_grounding},
           {"dpo_cap_per_item", c.dpo_cap_per_item}};
    if (c.templates_path) {
        j["templates"] = c.templates_path->generic_string();
    }
    return j;
}

}  // namespace coc
