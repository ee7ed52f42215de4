#include <cmath>
#include <chrono>
#include <mutex>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "medsum/errors.hpp"
#include "medsum/service.hpp"

namespace medsum {

namespace {

thread_local std::chrono::steady_clock::time_point g_request_started;

std::optional<std::string_view> query_param(const httplib::Request& req, const char* name) {
    auto it = req.params.find(name);
    if (it == req.params.end()) return std::nullopt;
    return std::string_view(it->second);
}

void reply(httplib::Response& res, const ApiResponse& api) {
    res.status = api.status;
    res.set_content(api.body, "application/json");
}

}  // namespace

HttpServer::HttpServer(const Service& service, ServiceConfig config)
    : service_(service), config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
    auto& svr = *server_;
    const std::size_t threads = std::max<std::size_t>(config_.worker_threads, 1);
    svr.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
    // Oversized bodies are rejected by the handler with a JSON error; the
    // transport limit only guards against unbounded uploads.
    svr.set_payload_max_length(config_.max_body_bytes * 4 + 4096);
    svr.set_default_headers({
        {"Access-Control-Allow-Origin", config_.cors_origin},
        {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
        {"Access-Control-Allow-Headers", "Content-Type"},
    });

    svr.set_pre_routing_handler([](const httplib::Request&, httplib::Response&) {
        g_request_started = std::chrono::steady_clock::now();
        return httplib::Server::HandlerResponse::Unhandled;
    });

    svr.Post("/api/v1/summarize", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.handle_summarize(req.body));
    });
    svr.Get("/api/v1/history", [this](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.handle_history(query_param(req, "limit"), query_param(req, "offset")));
    });
    svr.Get("/api/v1/health", [this](const httplib::Request&, httplib::Response& res) {
        reply(res, service_.handle_health());
    });
    svr.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    svr.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
        if (!res.body.empty()) return;
        ApiError err = res.status == 404   ? ApiError::not_found("no route for " + req.method + " " + req.path)
                       : res.status < 500 ? ApiError::invalid_request("request rejected with HTTP " + std::to_string(res.status))
                                          : ApiError::storage_error("internal error");
        res.set_content(err.to_json(), "application/json");
    });
    svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        res.status = 500;
        res.set_content(ApiError{"storage_error", "internal error", 500}.to_json(), "application/json");
    });

    if (config_.request_log) {
        auto* log = config_.request_log;
        auto log_mutex = std::make_shared<std::mutex>();
        svr.set_logger([log, log_mutex](const httplib::Request& req, const httplib::Response& res) {
            using namespace std::chrono;
            const double millis =
                duration_cast<microseconds>(steady_clock::now() - g_request_started).count() / 1000.0;
            nlohmann::ordered_json line;
            line["ts"] = format_timestamp(floor<microseconds>(system_clock::now()));
            line["method"] = req.method;
            line["path"] = req.path;
            line["status"] = res.status;
            line["millis"] = std::round(millis * 1000.0) / 1000.0;
            std::lock_guard lock(*log_mutex);
            *log << line.dump() << '\n' << std::flush;
        });
    }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
    if (config_.port == 0) {
        port_ = server_->bind_to_any_port(config_.host);
    } else {
        port_ = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
    }
    if (port_ <= 0) throw Error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    return port_;
}

void HttpServer::listen() {
    if (port_ <= 0) bind();
    server_->listen_after_bind();
}

int HttpServer::start() {
    const int port = bind();
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void HttpServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace medsum
