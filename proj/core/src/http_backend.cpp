#include "coc/http_backend.hpp"

#include <charconv>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "coc/errors.hpp"
#include "coc/rng.hpp"

namespace coc {

Endpoint parse_endpoint(const std::string& url) {
    Endpoint ep;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint '" + url + "' has no scheme");
    }
    ep.scheme = url.substr(0, scheme_end);
    if (ep.scheme != "http" && ep.scheme != "https") {
        throw ConfigError("endpoint scheme must be http or https: '" + url + "'");
    }
    const auto host_begin = scheme_end + 3;
    const auto path_begin = url.find('/', host_begin);
    std::string authority = url.substr(host_begin, path_begin == std::string::npos ? std::string::npos
                                                                                    : path_begin - host_begin);
    ep.path = path_begin == std::string::npos ? "/" : url.substr(path_begin);
    ep.port = ep.scheme == "https" ? 443 : 80;
    if (const auto colon = authority.rfind(':'); colon != std::string::npos) {
        const auto port_text = authority.substr(colon + 1);
        int port = 0;
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port <= 0 || port > 65535) {
            throw ConfigError("bad port in endpoint '" + url + "'");
        }
        ep.port = port;
        authority.resize(colon);
    }
    if (authority.empty()) {
        throw ConfigError("endpoint '" + url + "' has no host");
    }
    ep.host = authority;
    return ep;
}

HttpBackend::HttpBackend(Endpoint endpoint, std::string api_key, int timeout_seconds)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (endpoint_.scheme == "https") {
        throw ConfigError("this build has no TLS support; use an http:// endpoint");
    }
#endif
}

std::string HttpBackend::complete(const CompletionRequest& request) {
    nlohmann::json body;
    body["model"] = request.model;
    body["temperature"] = request.temperature;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages) {
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    if (request.seed) {
        body["seed"] = derive_seed(*request.seed, {request.sample_index}) & 0x7fffffffULL;
    }

    const std::string base = endpoint_.scheme + "://" + endpoint_.host + ":" + std::to_string(endpoint_.port);
    httplib::Client client(base);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_write_timeout(timeout_seconds_, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) {
        headers.emplace("Authorization", "Bearer " + api_key_);
    }

    auto res = client.Post(endpoint_.path, headers, body.dump(), "application/json");
    if (!res) {
        throw ProviderError("transport error talking to " + base + ": " + httplib::to_string(res.error()), 0, true);
    }
    const int status = res->status;
    if (status < 200 || status >= 300) {
        const bool retryable = status == 429 || status >= 500;
        throw ProviderError("provider returned HTTP " + std::to_string(status) + ": " + res->body.substr(0, 300),
                            status, retryable);
    }
    try {
        const auto parsed = nlohmann::json::parse(res->body);
        const auto& content = parsed.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string{} : content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError(std::string("unexpected completion payload: ") + e.what(), status, false);
    }
}

}  // namespace coc
