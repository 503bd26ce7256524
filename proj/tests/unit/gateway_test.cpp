#include <gtest/gtest.h>

#include <fstream>

#include "coc/call_log.hpp"
#include "coc/errors.hpp"
#include "coc/jsonl.hpp"
#include "coc/llm_gateway.hpp"
#include "test_support.hpp"

namespace coc {
namespace {

std::shared_ptr<test::FnBackend> echo_backend() {
    return std::make_shared<test::FnBackend>(
        [](const CompletionRequest& r) { return "reply to " + r.messages.back().content; });
}

TEST(Gateway, LedgerChargesSharedPrefixOnce) {
    Gateway gw(echo_backend(), test::mock_config());
    ChatSession s("s");
    s.append({Role::system, "one two three"});  // 3 tokens
    s.append({Role::user, "a b c d e"});        // 5 tokens
    TokenLedger ledger;

    gw.complete(s, {Role::user, "first ask"}, ledger);  // prompt 3+5+2 = 10, reply "reply to first ask" = 4
    auto t = ledger.totals();
    EXPECT_EQ(t.prompt_tokens_charged, 10u);
    EXPECT_EQ(t.cached_tokens_saved, 0u);
    EXPECT_EQ(t.generated_tokens, 4u);

    s.append({Role::assistant, "x y"});                 // 2 tokens, outside the cache
    gw.complete(s, {Role::user, "second"}, ledger);     // cached 3+5+2+4 = 14, new 2+1 = 3
    t = ledger.totals();
    EXPECT_EQ(t.prompt_tokens_charged, 13u);
    EXPECT_EQ(t.cached_tokens_saved, 14u);
    EXPECT_EQ(t.generated_tokens, 7u);
    EXPECT_EQ(t.calls, 2u);
    EXPECT_EQ(s.prefix_marker(), s.size());
    EXPECT_EQ(s.assistant_turns(), 3u);
}

TEST(Gateway, ContextOverflowLeavesSessionUntouched) {
    auto cfg = test::mock_config();
    cfg.max_context_tokens = 5;
    auto backend = echo_backend();
    Gateway gw(backend, cfg);
    ChatSession s;
    s.append({Role::system, "a b c d"});
    EXPECT_THROW(gw.complete(s, {Role::user, "e f"}), ContextOverflow);
    EXPECT_EQ(s.size(), 1u);
    EXPECT_EQ(gw.ledger().totals(), LedgerTotals{});
    EXPECT_EQ(backend->calls.load(), 0);
}

TEST(Gateway, RejectsNonUserMessages) {
    Gateway gw(echo_backend(), test::mock_config());
    ChatSession s;
    EXPECT_THROW(gw.complete(s, {Role::assistant, "x"}), Error);
    EXPECT_THROW(gw.complete(s, {Role::user, ""}), Error);
}

TEST(Gateway, RetriesRetryableErrorsWithBackoff) {
    int failures = 2;
    auto backend = std::make_shared<test::FnBackend>([&](const CompletionRequest&) -> std::string {
        if (failures-- > 0) {
            throw ProviderError("busy", 503, true);
        }
        return "ok";
    });
    auto cfg = test::mock_config();
    cfg.retry = RetryPolicy{3, 100};
    Gateway gw(backend, cfg);
    std::vector<long> sleeps;
    gw.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
    ChatSession s;
    EXPECT_EQ(gw.complete(s, {Role::user, "hi"}).content, "ok");
    EXPECT_EQ(backend->calls.load(), 3);
    ASSERT_EQ(sleeps.size(), 2u);
    // base * 2^(attempt-1) plus jitter below base
    EXPECT_GE(sleeps[0], 100);
    EXPECT_LT(sleeps[0], 200);
    EXPECT_GE(sleeps[1], 200);
    EXPECT_LT(sleeps[1], 300);
}

TEST(Gateway, GivesUpAfterMaxAttemptsAndOnTerminalErrors) {
    auto always = std::make_shared<test::FnBackend>(
        [](const CompletionRequest&) -> std::string { throw ProviderError("busy", 429, true); });
    auto cfg = test::mock_config();
    cfg.retry = RetryPolicy{4, 0};
    Gateway gw(always, cfg);
    gw.set_sleeper([](std::chrono::milliseconds) {});
    ChatSession s;
    EXPECT_THROW(gw.complete(s, {Role::user, "hi"}), ProviderError);
    EXPECT_EQ(always->calls.load(), 4);
    EXPECT_EQ(s.size(), 0u);

    auto terminal = std::make_shared<test::FnBackend>(
        [](const CompletionRequest&) -> std::string { throw ProviderError("bad", 400, false); });
    Gateway gw2(terminal, cfg);
    EXPECT_THROW(gw2.complete(s, {Role::user, "hi"}), ProviderError);
    EXPECT_EQ(terminal->calls.load(), 1);
}

TEST(Gateway, RequestKeyDependsOnEveryInput) {
    Gateway gw(echo_backend(), test::mock_config("m1"));
    Gateway other_model(echo_backend(), test::mock_config("m2"));
    std::vector<ChatMessage> msgs{{Role::system, "s"}, {Role::user, "u"}};
    const auto base = gw.request_key(msgs, {});
    EXPECT_EQ(base, gw.request_key(msgs, {}));
    EXPECT_NE(base, other_model.request_key(msgs, {}));
    EXPECT_NE(base, gw.request_key(msgs, CallOptions{1, std::nullopt}));
    EXPECT_NE(base, gw.request_key(msgs, CallOptions{0, 0}));
    auto changed = msgs;
    changed[0].role = Role::user;
    EXPECT_NE(base, gw.request_key(changed, {}));
    changed = msgs;
    changed[1].content = "v";
    EXPECT_NE(base, gw.request_key(changed, {}));
}

TEST(CallLogReplay, SecondRunReplaysWithoutBackendCalls) {
    test::TempDir dir;
    const auto path = dir / "calls.jsonl";
    auto run = [&](std::shared_ptr<test::FnBackend> backend) {
        Gateway gw(backend, test::mock_config());
        gw.attach_call_log(std::make_shared<CallLog>(path));
        ChatSession s("s");
        gw.complete(s, {Role::user, "one"});
        gw.complete(s, {Role::user, "two"});
        ChatSession t("t");
        gw.complete(t, {Role::user, "one"});
        return std::make_pair(s.messages(), gw.ledger().totals());
    };
    auto first_backend = echo_backend();
    const auto first = run(first_backend);
    EXPECT_EQ(first_backend->calls.load(), 3);
    EXPECT_EQ(read_call_log(path).size(), 3u);

    auto second_backend = echo_backend();
    const auto second = run(second_backend);
    EXPECT_EQ(second_backend->calls.load(), 0);
    EXPECT_EQ(second, first);
    EXPECT_EQ(read_call_log(path).size(), 3u);
}

TEST(CallLogReplay, TamperedLineIsReportedWithItsNumber) {
    test::TempDir dir;
    const auto path = dir / "calls.jsonl";
    {
        Gateway gw(echo_backend(), test::mock_config());
        gw.attach_call_log(std::make_shared<CallLog>(path));
        ChatSession s;
        gw.complete(s, {Role::user, "one"});
        gw.complete(s, {Role::user, "two"});
    }
    auto lines = read_jsonl(path);
    lines[1]["reply"] = "edited";
    {
        std::ofstream out(path, std::ios::trunc);
        for (const auto& l : lines) {
            out << l.dump() << "\n";
        }
    }
    try {
        CallLog log(path);
        FAIL();
    } catch (const ResumeError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos);
    }
}

TEST(CallLogReplay, TornFinalLineIsDropped) {
    test::TempDir dir;
    const auto path = dir / "calls.jsonl";
    {
        Gateway gw(echo_backend(), test::mock_config());
        gw.attach_call_log(std::make_shared<CallLog>(path));
        ChatSession s;
        gw.complete(s, {Role::user, "one"});
    }
    {
        std::ofstream out(path, std::ios::app);
        out << R"({"key": "abc", "rep)";
    }
    CallLog log(path);
    EXPECT_EQ(log.loaded_entries(), 1u);
    EXPECT_EQ(read_text_file(path).back(), '\n');
}

TEST(BackendConfig, Validation) {
    BackendConfig c = test::mock_config();
    EXPECT_NO_THROW(c.validate());
    c.temperature = 3.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = test::mock_config();
    c.script.clear();
    EXPECT_THROW(c.validate(), ConfigError);
    c = test::mock_config();
    c.retry.max_attempts = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = BackendConfig{};
    c.kind = BackendKind::http_provider;
    c.endpoint = "http://localhost:8000/v1/chat/completions";
    EXPECT_THROW(c.validate(), ConfigError);
    c.api_key_env = "SOME_KEY";
    EXPECT_NO_THROW(c.validate());
    c.endpoint = "ftp://x";
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ChatMessageJson, RoundTrip) {
    ChatMessage m{Role::assistant, "hi"};
    EXPECT_EQ(nlohmann::json(m).get<ChatMessage>(), m);
    EXPECT_THROW(role_from_string("tool"), Error);
    LedgerTotals t{1, 2, 3, 4};
    EXPECT_EQ(nlohmann::json(t).get<LedgerTotals>(), t);
}

}  // namespace
}  // namespace coc
