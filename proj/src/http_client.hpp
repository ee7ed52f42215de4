#pragma once

// Minimal JSON-over-HTTP POST shared by the remote embedding provider and
// the remote summarizer backend.

#include <chrono>
#include <optional>
#include <string>

namespace medsum::detail {

struct HttpResult {
    int status = 0;
    std::string body;
};

/// Splits "http://host:port/prefix" into the scheme-host-port part and the path prefix.
struct Endpoint {
    std::string origin;
    std::string path_prefix;

    static Endpoint parse(const std::string& url);
    std::string url_for(const std::string& path) const { return origin + path_prefix + path; }
};

/// Returns nullopt on transport failure (connect, timeout, reset); `error` gets the reason.
std::optional<HttpResult> post_json(const Endpoint& endpoint, const std::string& path,
                                    const std::string& body, const std::string& bearer_token,
                                    std::chrono::milliseconds timeout, std::string& error);

std::optional<HttpResult> get(const Endpoint& endpoint, const std::string& path,
                              std::chrono::milliseconds timeout, std::string& error);

}  // namespace medsum::detail
