#pragma once

#include <string>

#include "coc/llm_gateway.hpp"

namespace coc {

struct Endpoint {
    std::string scheme;  // "http" or "https"
    std::string host;
    int port = 0;
    std::string path;
};

// Parses "http[s]://host[:port]/path". Throws ConfigError.
Endpoint parse_endpoint(const std::string& url);

// Chat-completions client: POSTs {"model", "messages", "temperature"[, "seed"]}
// and reads choices[0].message.content. One attempt per complete(); retries
// belong to the Gateway. HTTP 429 and 5xx come back as retryable
// ProviderErrors, other 4xx as terminal ones.
class HttpBackend final : public ChatBackend {
public:
    // api_key may be empty for local servers.
    HttpBackend(Endpoint endpoint, std::string api_key, int timeout_seconds = 600);

    std::string complete(const CompletionRequest& request) override;

private:
    Endpoint endpoint_;
    std::string api_key_;
    int timeout_seconds_;
};

}  // namespace coc
