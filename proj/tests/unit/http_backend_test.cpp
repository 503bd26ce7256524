#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "coc/errors.hpp"
#include "coc/http_backend.hpp"
#include "coc/llm_gateway.hpp"

namespace coc {
namespace {

// Local chat-completions server whose status codes are scripted per request.
class FakeProvider {
public:
    explicit FakeProvider(std::vector<int> statuses) : statuses_(std::move(statuses)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const auto n = requests_.fetch_add(1);
            last_body_ = req.body;
            last_auth_ = req.get_header_value("Authorization");
            const int status = n < statuses_.size() ? statuses_[n] : 200;
            res.status = status;
            if (status == 200) {
                const auto body = nlohmann::json::parse(req.body);
                nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"},
                                                                {"content", "echo: " + body["messages"].back()["content"].get<std::string>()}}}}}}};
                res.set_content(reply.dump(), "application/json");
            } else {
                res.set_content("{\"error\": \"scripted\"}", "application/json");
            }
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeProvider() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions"; }
    std::size_t requests() const { return requests_.load(); }
    const std::string& last_body() const { return last_body_; }
    const std::string& last_auth() const { return last_auth_; }

private:
    std::vector<int> statuses_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    std::atomic<std::size_t> requests_{0};
    std::string last_body_;
    std::string last_auth_;
};

std::unique_ptr<Gateway> make_gateway(const FakeProvider& provider, int attempts) {
    BackendConfig cfg;
    cfg.kind = BackendKind::http_provider;
    cfg.endpoint = provider.url();
    cfg.model_name = "local-model";
    cfg.api_key_env = "UNUSED";
    cfg.retry = RetryPolicy{attempts, 1};
    cfg.temperature = 0.5;
    auto backend = std::make_shared<HttpBackend>(parse_endpoint(cfg.endpoint), "secret", 5);
    return std::make_unique<Gateway>(backend, cfg);
}

TEST(Endpoint, Parsing) {
    const auto ep = parse_endpoint("https://api.example.com/v1/chat/completions");
    EXPECT_EQ(ep.scheme, "https");
    EXPECT_EQ(ep.host, "api.example.com");
    EXPECT_EQ(ep.port, 443);
    EXPECT_EQ(ep.path, "/v1/chat/completions");
    const auto local = parse_endpoint("http://localhost:8080");
    EXPECT_EQ(local.port, 8080);
    EXPECT_EQ(local.path, "/");
    EXPECT_THROW(parse_endpoint("localhost:8080"), ConfigError);
    EXPECT_THROW(parse_endpoint("http://host:99999/"), ConfigError);
    EXPECT_THROW(parse_endpoint("http://:80/"), ConfigError);
}

TEST(HttpBackend, SuccessSendsModelMessagesAndKey) {
    FakeProvider provider({200});
    auto gw_ptr = make_gateway(provider, 1);
    auto& gw = *gw_ptr;
    ChatSession s;
    s.append({Role::system, "be brief"});
    const auto reply = gw.complete(s, {Role::user, "hello"}, CallOptions{2, 9});
    EXPECT_EQ(reply.content, "echo: hello");
    const auto body = nlohmann::json::parse(provider.last_body());
    EXPECT_EQ(body["model"], "local-model");
    EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.5);
    ASSERT_EQ(body["messages"].size(), 2u);
    EXPECT_EQ(body["messages"][0]["role"], "system");
    EXPECT_TRUE(body.contains("seed"));
    EXPECT_EQ(provider.last_auth(), "Bearer secret");
}

TEST(HttpBackend, RetriesServerErrorsAndRateLimits) {
    FakeProvider provider({500, 429, 200});
    auto gw_ptr = make_gateway(provider, 3);
    auto& gw = *gw_ptr;
    ChatSession s;
    EXPECT_EQ(gw.complete(s, {Role::user, "hi"}).content, "echo: hi");
    EXPECT_EQ(provider.requests(), 3u);
}

TEST(HttpBackend, ClientErrorIsTerminal) {
    FakeProvider provider({400, 200});
    auto gw_ptr = make_gateway(provider, 3);
    auto& gw = *gw_ptr;
    ChatSession s;
    try {
        gw.complete(s, {Role::user, "hi"});
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.status(), 400);
        EXPECT_FALSE(e.retryable());
    }
    EXPECT_EQ(provider.requests(), 1u);
}

TEST(HttpBackend, TransportFailureIsRetryable) {
    auto backend = std::make_shared<HttpBackend>(parse_endpoint("http://127.0.0.1:1/x"), "", 1);
    std::vector<ChatMessage> msgs{{Role::user, "hi"}};
    CompletionRequest req;
    req.messages = msgs;
    try {
        backend->complete(req);
        FAIL();
    } catch (const ProviderError& e) {
        EXPECT_EQ(e.status(), 0);
        EXPECT_TRUE(e.retryable());
    }
}

}  // namespace
}  // namespace coc
