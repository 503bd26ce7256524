#include "coc/llm_gateway.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "coc/call_log.hpp"
#include "coc/errors.hpp"
#include "coc/hash.hpp"
#include "coc/http_backend.hpp"
#include "coc/rng.hpp"
#include "coc/scripted_backend.hpp"

namespace coc {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::system:
            return "system";
        case Role::user:
            return "user";
        case Role::assistant:
            return "assistant";
    }
    return "user";
}

Role role_from_string(std::string_view name) {
    if (name == "system") {
        return Role::system;
    }
    if (name == "user") {
        return Role::user;
    }
    if (name == "assistant") {
        return Role::assistant;
    }
    throw Error("unknown chat role '" + std::string(name) + "'");
}

void ChatSession::append(ChatMessage message) { messages_.push_back(std::move(message)); }

std::size_t ChatSession::assistant_turns() const {
    std::size_t n = 0;
    for (const auto& m : messages_) {
        n += m.role == Role::assistant ? 1 : 0;
    }
    return n;
}

LedgerTotals& LedgerTotals::operator+=(const LedgerTotals& other) {
    prompt_tokens_charged += other.prompt_tokens_charged;
    cached_tokens_saved += other.cached_tokens_saved;
    generated_tokens += other.generated_tokens;
    calls += other.calls;
    return *this;
}

void TokenLedger::record(std::uint64_t charged, std::uint64_t cached, std::uint64_t generated) {
    std::lock_guard lock(mutex_);
    totals_.prompt_tokens_charged += charged;
    totals_.cached_tokens_saved += cached;
    totals_.generated_tokens += generated;
    totals_.calls += 1;
}

LedgerTotals TokenLedger::totals() const {
    std::lock_guard lock(mutex_);
    return totals_;
}

void BackendConfig::validate() const {
    if (kind == BackendKind::http_provider) {
        if (endpoint.empty()) {
            throw ConfigError("http_provider backend needs an endpoint");
        }
        if (api_key_env.empty()) {
            throw ConfigError("http_provider backend needs api_key_env");
        }
        parse_endpoint(endpoint);
    } else if (script.empty()) {
        throw ConfigError("scripted_mock backend needs a script path");
    }
    if (max_context_tokens == 0) {
        throw ConfigError("max_context_tokens must be positive");
    }
    if (!(temperature >= 0.0 && temperature <= 2.0)) {
        throw ConfigError("temperature must be in [0, 2]");
    }
    if (retry.max_attempts < 1) {
        throw ConfigError("retry.max_attempts must be at least 1");
    }
    if (retry.base_backoff_ms < 0) {
        throw ConfigError("retry.base_backoff_ms must be non-negative");
    }
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
    config.validate();
    if (config.kind == BackendKind::scripted_mock) {
        return std::make_unique<ScriptedBackend>(load_script(config.script));
    }
    const char* key = std::getenv(config.api_key_env.c_str());
    if (key == nullptr) {
        throw ConfigError("environment variable " + config.api_key_env + " is not set");
    }
    return std::make_unique<HttpBackend>(parse_endpoint(config.endpoint), key, config.timeout_seconds);
}

std::size_t count_message_tokens(std::span<const ChatMessage> messages, const Tokenizer& tokenizer) {
    std::size_t total = 0;
    for (const auto& m : messages) {
        total += tokenizer.count(m.content);
    }
    return total;
}

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, BackendConfig config, const Tokenizer& tokenizer,
                 std::size_t concurrency_limit)
    : backend_(std::move(backend)),
      config_(std::move(config)),
      tokenizer_(tokenizer),
      in_flight_(static_cast<std::ptrdiff_t>(std::clamp<std::size_t>(concurrency_limit, 1, 1024))),
      jitter_state_(fnv1a64(config_.model_name)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    if (!backend_) {
        throw ConfigError("gateway needs a backend");
    }
}

std::string Gateway::request_key(std::span<const ChatMessage> messages, const CallOptions& options) const {
    Fnv1a64 h;
    h.field(config_.model_name);
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6f", config_.temperature);
    h.field(std::string_view(temp));
    h.field(options.sample_index);
    h.field(options.seed ? *options.seed + 1 : 0);
    h.field(static_cast<std::uint64_t>(messages.size()));
    for (const auto& m : messages) {
        h.field(to_string(m.role));
        h.field(m.content);
    }
    return h.hex();
}

std::string Gateway::call_backend(const CompletionRequest& request) {
    const int attempts = std::max(1, config_.retry.max_attempts);
    for (int attempt = 1;; ++attempt) {
        try {
            in_flight_.acquire();
            struct Release {
                std::counting_semaphore<1024>& s;
                ~Release() { s.release(); }
            } release{in_flight_};
            return backend_->complete(request);
        } catch (const ProviderError& e) {
            if (!e.retryable() || attempt >= attempts) {
                throw;
            }
        }
        const auto base = static_cast<std::uint64_t>(config_.retry.base_backoff_ms);
        std::uint64_t jitter = 0;
        if (base > 0) {
            std::lock_guard lock(jitter_mutex_);
            jitter_state_ = splitmix64(jitter_state_);
            jitter = jitter_state_ % base;
        }
        const std::uint64_t delay = (base << (attempt - 1)) + jitter;
        sleeper_(std::chrono::milliseconds(delay));
    }
}

ChatMessage Gateway::complete(ChatSession& session, ChatMessage user_message, const CallOptions& options) {
    return complete(session, std::move(user_message), ledger_, options);
}

ChatMessage Gateway::complete(ChatSession& session, ChatMessage user_message, TokenLedger& ledger,
                              const CallOptions& options) {
    if (user_message.role != Role::user) {
        throw Error("complete() expects a user message");
    }
    if (user_message.content.empty()) {
        throw Error("user message must not be empty");
    }
    std::vector<ChatMessage> prompt;
    prompt.reserve(session.messages_.size() + 1);
    prompt = session.messages_;
    prompt.push_back(std::move(user_message));

    const std::size_t marker = std::min(session.prefix_marker_, session.messages_.size());
    const std::size_t cached = count_message_tokens(std::span(prompt).first(marker), tokenizer_);
    const std::size_t full = cached + count_message_tokens(std::span(prompt).subspan(marker), tokenizer_);
    if (full > config_.max_context_tokens) {
        throw ContextOverflow("prompt of " + std::to_string(full) + " tokens exceeds the " +
                              std::to_string(config_.max_context_tokens) + "-token context of " +
                              config_.model_name);
    }

    const std::string key = request_key(prompt, options);
    std::string reply;
    bool replayed = false;
    if (call_log_) {
        if (auto cached_reply = call_log_->take_replay(key)) {
            reply = std::move(*cached_reply);
            replayed = true;
        }
    }
    if (!replayed) {
        CompletionRequest request;
        request.messages = prompt;
        request.model = config_.model_name;
        request.temperature = config_.temperature;
        request.sample_index = options.sample_index;
        request.seed = options.seed;
        reply = call_backend(request);
        backend_calls_.fetch_add(1);
    } else {
        replayed_calls_.fetch_add(1);
    }

    const std::size_t generated = tokenizer_.count(reply);
    ledger.record(full - cached, cached, generated);
    if (call_log_ && !replayed) {
        CallLog::Entry entry;
        entry.key = key;
        entry.session_id = session.id_;
        entry.last_user = prompt.back().content.substr(0, 200);
        entry.reply = reply;
        entry.prompt_tokens = full - cached;
        entry.cached_tokens = cached;
        entry.generated_tokens = generated;
        call_log_->append(entry);
    }

    session.messages_.push_back(std::move(prompt.back()));
    session.messages_.push_back(ChatMessage{Role::assistant, reply});
    session.prefix_marker_ = session.messages_.size();
    return session.messages_.back();
}

void to_json(nlohmann::json& j, const ChatMessage& message) {
    j = nlohmann::json{{"role", to_string(message.role)}, {"content", message.content}};
}

void from_json(const nlohmann::json& j, ChatMessage& message) {
    message.role = role_from_string(j.at("role").get<std::string>());
    message.content = j.at("content").get<std::string>();
}

void to_json(nlohmann::json& j, const LedgerTotals& totals) {
    j = nlohmann::json{{"prompt_tokens_charged", totals.prompt_tokens_charged},
                       {"cached_tokens_saved", totals.cached_tokens_saved},
                       {"generated_tokens", totals.generated_tokens},
                       {"calls", totals.calls}};
}

void from_json(const nlohmann::json& j, LedgerTotals& totals) {
    totals.prompt_tokens_charged = j.at("prompt_tokens_charged").get<std::uint64_t>();
    totals.cached_tokens_saved = j.at("cached_tokens_saved").get<std::uint64_t>();
    totals.generated_tokens = j.at("generated_tokens").get<std::uint64_t>();
    totals.calls = j.at("calls").get<std::uint64_t>();
}

}  // namespace coc
