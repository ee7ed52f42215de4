#pragma once

// REST API over the summarizer backends and the summary store:
//   POST /api/v1/summarize   {"model": "passage|conversation|question", "text": "..."}
//   GET  /api/v1/history?limit=&offset=
//   GET  /api/v1/health

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>

#include "medsum/backends.hpp"
#include "medsum/store.hpp"

namespace httplib {
class Server;
}

namespace medsum {

struct ApiError {
    std::string code;  // invalid_request | backend_unavailable | storage_error | not_found
    std::string message;
    int http_status = 500;

    static ApiError invalid_request(std::string message) { return {"invalid_request", std::move(message), 400}; }
    static ApiError backend_unavailable(std::string message) {
        return {"backend_unavailable", std::move(message), 503};
    }
    static ApiError storage_error(std::string message) { return {"storage_error", std::move(message), 500}; }
    static ApiError not_found(std::string message) { return {"not_found", std::move(message), 404}; }

    std::string to_json() const;
};

struct ApiResponse {
    int status = 200;
    std::string body;  // always a JSON document

    static ApiResponse from(const ApiError& error) { return {error.http_status, error.to_json()}; }
};

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_body_bytes = 1 << 20;
    std::size_t max_summary_tokens = 128;
    std::string cors_origin = "*";
    std::size_t worker_threads = 8;
    std::ostream* request_log = nullptr;  // one JSON line per request when set

    /// Parses "host:port" (MEDSUM_ADDR format).
    void set_address(std::string_view addr);
};

using BackendSet = std::map<TaskKind, std::shared_ptr<Summarizer>>;

/// Request handlers, independent of the HTTP transport.
class Service {
public:
    Service(std::shared_ptr<SummaryStore> store, BackendSet backends, ServiceConfig config = {});

    /// Summarize, persist, then answer. Nothing is stored unless the backend succeeded,
    /// and no summary is returned unless it was stored.
    ApiResponse handle_summarize(std::string_view body) const;
    ApiResponse handle_history(std::optional<std::string_view> limit, std::optional<std::string_view> offset) const;
    ApiResponse handle_health() const;

    const ServiceConfig& config() const { return config_; }

private:
    std::shared_ptr<SummaryStore> store_;
    BackendSet backends_;
    ServiceConfig config_;
};

/// httplib front end for a Service. stop() drains in-flight requests.
class HttpServer {
public:
    HttpServer(const Service& service, ServiceConfig config);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds host:port (port 0 picks a free one); returns the bound port.
    int bind();
    /// Serves on the calling thread until stop().
    void listen();
    /// bind() + listen() on a background thread; returns the bound port.
    int start();
    void stop();

    int port() const { return port_; }

private:
    const Service& service_;
    ServiceConfig config_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace medsum
