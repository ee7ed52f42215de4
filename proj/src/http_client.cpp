#include "http_client.hpp"

#include <httplib.h>

#include "medsum/errors.hpp"

namespace medsum::detail {

Endpoint Endpoint::parse(const std::string& url) {
    std::size_t scheme_end = url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    std::size_t path_start = url.find('/', host_start);
    Endpoint ep;
    if (path_start == std::string::npos) {
        ep.origin = url;
    } else {
        ep.origin = url.substr(0, path_start);
        ep.path_prefix = url.substr(path_start);
        while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
    }
    if (scheme_end == std::string::npos) ep.origin = "http://" + ep.origin;
    if (ep.origin.size() <= 7) throw ValidationError("invalid endpoint URL '" + url + "'");
    return ep;
}

namespace {

httplib::Client make_client(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    client.set_keep_alive(false);
    return client;
}

}  // namespace

std::optional<HttpResult> post_json(const Endpoint& endpoint, const std::string& path,
                                    const std::string& body, const std::string& bearer_token,
                                    std::chrono::milliseconds timeout, std::string& error) {
    auto client = make_client(endpoint, timeout);
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
    auto res = client.Post(endpoint.path_prefix + path, headers, body, "application/json");
    if (!res) {
        error = httplib::to_string(res.error());
        return std::nullopt;
    }
    return HttpResult{res->status, res->body};
}

std::optional<HttpResult> get(const Endpoint& endpoint, const std::string& path,
                              std::chrono::milliseconds timeout, std::string& error) {
    auto client = make_client(endpoint, timeout);
    auto res = client.Get(endpoint.path_prefix + path);
    if (!res) {
        error = httplib::to_string(res.error());
        return std::nullopt;
    }
    return HttpResult{res->status, res->body};
}

}  // namespace medsum::detail
