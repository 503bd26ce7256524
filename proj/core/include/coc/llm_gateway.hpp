#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coc/tokenizer.hpp"

namespace coc {

class CallLog;

enum class Role { system, user, assistant };

std::string_view to_string(Role role);
Role role_from_string(std::string_view name);

struct ChatMessage {
    Role role = Role::user;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

// Append-only conversation. Messages before prefix_marker are treated as
// already sitting in the serving layer's prefix cache.
class ChatSession {
public:
    ChatSession() = default;
    explicit ChatSession(std::string session_id) : id_(std::move(session_id)) {}

    const std::string& id() const { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }

    const std::vector<ChatMessage>& messages() const { return messages_; }
    std::size_t size() const { return messages_.size(); }
    std::size_t prefix_marker() const { return prefix_marker_; }

    // Appends a message without a completion call (system prompt, context,
    // or a reply produced outside the model such as an iterative pointback
    // summary).
    void append(ChatMessage message);

    // Number of assistant messages so far; the next reply is turn
    // assistant_turns() + 1.
    std::size_t assistant_turns() const;

private:
    friend class Gateway;

    std::string id_;
    std::vector<ChatMessage> messages_;
    std::size_t prefix_marker_ = 0;
};

struct LedgerTotals {
    std::uint64_t prompt_tokens_charged = 0;
    std::uint64_t cached_tokens_saved = 0;
    std::uint64_t generated_tokens = 0;
    std::uint64_t calls = 0;

    bool operator==(const LedgerTotals&) const = default;
    LedgerTotals& operator+=(const LedgerTotals& other);
};

// Counters are monotone; record() applies one call atomically.
class TokenLedger {
public:
    void record(std::uint64_t charged, std::uint64_t cached, std::uint64_t generated);
    LedgerTotals totals() const;

private:
    mutable std::mutex mutex_;
    LedgerTotals totals_;
};

struct RetryPolicy {
    int max_attempts = 3;
    int base_backoff_ms = 200;
};

enum class BackendKind { http_provider, scripted_mock };

struct BackendConfig {
    BackendKind kind = BackendKind::scripted_mock;
    std::string endpoint;
    std::string model_name = "mock";
    std::size_t max_context_tokens = 131072;
    double temperature = 0.7;
    RetryPolicy retry;
    std::string api_key_env;
    std::filesystem::path script;
    int timeout_seconds = 600;

    // Throws ConfigError on violated invariants.
    void validate() const;
};

// What a backend sees for one completion.
struct CompletionRequest {
    std::span<const ChatMessage> messages;
    std::string model;
    double temperature = 0.0;
    // Which sample this is among siblings generated from the same prompt.
    // Scripted backends use it to pick a variant; HTTP backends derive the
    // provider-side sampling seed from it.
    std::uint64_t sample_index = 0;
    std::optional<std::uint64_t> seed;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    // Returns the assistant text or throws ProviderError / ScriptExhausted.
    virtual std::string complete(const CompletionRequest& request) = 0;
};

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config);

struct CallOptions {
    std::uint64_t sample_index = 0;
    std::optional<std::uint64_t> seed;
};

// Entry point for all model traffic: context checks, retries, the token
// ledger, call logging and replay. Shareable across threads; a single
// ChatSession must only be used by one thread at a time.
class Gateway {
public:
    Gateway(std::shared_ptr<ChatBackend> backend, BackendConfig config,
            const Tokenizer& tokenizer = default_tokenizer(), std::size_t concurrency_limit = 4);

    // Appends user_message and the reply to session, charges ledger, and
    // advances the session's prefix marker. Session and ledger are left
    // untouched when this throws.
    ChatMessage complete(ChatSession& session, ChatMessage user_message, TokenLedger& ledger,
                         const CallOptions& options = {});

    // Same, charging the gateway's own ledger.
    ChatMessage complete(ChatSession& session, ChatMessage user_message,
                         const CallOptions& options = {});

    const BackendConfig& config() const { return config_; }
    const Tokenizer& tokenizer() const { return tokenizer_; }
    TokenLedger& ledger() { return ledger_; }

    void attach_call_log(std::shared_ptr<CallLog> log) { call_log_ = std::move(log); }
    const std::shared_ptr<CallLog>& call_log() const { return call_log_; }

    // Backend invocations that returned a reply, excluding replays.
    std::uint64_t backend_calls() const { return backend_calls_.load(); }
    std::uint64_t replayed_calls() const { return replayed_calls_.load(); }

    // Hook for tests; defaults to std::this_thread::sleep_for.
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) {
        sleeper_ = std::move(sleeper);
    }

    // Stable key for a request, used by the call log to replay it.
    std::string request_key(std::span<const ChatMessage> messages, const CallOptions& options) const;

private:
    std::string call_backend(const CompletionRequest& request);

    std::shared_ptr<ChatBackend> backend_;
    BackendConfig config_;
    const Tokenizer& tokenizer_;
    TokenLedger ledger_;
    std::shared_ptr<CallLog> call_log_;
    std::counting_semaphore<1024> in_flight_;
    std::atomic<std::uint64_t> backend_calls_{0};
    std::atomic<std::uint64_t> replayed_calls_{0};
    std::mutex jitter_mutex_;
    std::uint64_t jitter_state_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
};

std::size_t count_message_tokens(std::span<const ChatMessage> messages, const Tokenizer& tokenizer);

void to_json(nlohmann::json& j, const ChatMessage& message);
void from_json(const nlohmann::json& j, ChatMessage& message);
void to_json(nlohmann::json& j, const LedgerTotals& totals);
void from_json(const nlohmann::json& j, LedgerTotals& totals);

}  // namespace coc
