#include "medsum/service.hpp"

#include <charconv>

#include <nlohmann/json.hpp>

#include "medsum/errors.hpp"

namespace medsum {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::size_t kDefaultHistoryLimit = 20;
constexpr std::size_t kMaxHistoryLimit = 1000;

std::optional<std::size_t> parse_count(std::string_view s) {
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return value;
}

ApiResponse ok(const ojson& body) { return {200, body.dump()}; }

}  // namespace

std::string ApiError::to_json() const {
    ojson j;
    j["code"] = code;
    j["message"] = message;
    return j.dump(-1, ' ', false, ojson::error_handler_t::replace);
}

void ServiceConfig::set_address(std::string_view addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string_view::npos) throw ValidationError("address must be host:port");
    auto p = parse_count(addr.substr(colon + 1));
    if (!p || *p > 65535) throw ValidationError("invalid port in address '" + std::string(addr) + "'");
    host = std::string(addr.substr(0, colon));
    port = static_cast<int>(*p);
}

Service::Service(std::shared_ptr<SummaryStore> store, BackendSet backends, ServiceConfig config)
    : store_(std::move(store)), backends_(std::move(backends)), config_(std::move(config)) {}

ApiResponse Service::handle_summarize(std::string_view body) const {
    if (body.size() > config_.max_body_bytes)
        return ApiResponse::from(ApiError::invalid_request("request body exceeds " +
                                                           std::to_string(config_.max_body_bytes) + " bytes"));
    ojson req;
    try {
        req = ojson::parse(body);
    } catch (const ojson::parse_error& e) {
        return ApiResponse::from(ApiError::invalid_request("body is not valid JSON (byte " + std::to_string(e.byte) + ")"));
    }
    if (!req.is_object()) return ApiResponse::from(ApiError::invalid_request("body must be a JSON object"));

    auto model_it = req.find("model");
    if (model_it == req.end() || !model_it->is_string())
        return ApiResponse::from(ApiError::invalid_request("'model' must be one of passage, conversation, question"));
    auto task = parse_task(model_it->get<std::string>());
    if (!task)
        return ApiResponse::from(ApiError::invalid_request("'model' must be one of passage, conversation, question"));

    auto text_it = req.find("text");
    if (text_it == req.end() || !text_it->is_string())
        return ApiResponse::from(ApiError::invalid_request("'text' must be a string"));
    const std::string text = text_it->get<std::string>();
    if (trim(text).empty()) return ApiResponse::from(ApiError::invalid_request("'text' is empty"));

    auto backend_it = backends_.find(*task);
    if (backend_it == backends_.end() || !backend_it->second)
        return ApiResponse::from(ApiError::backend_unavailable("no backend configured for " + std::string(to_string(*task))));

    SummaryOutput output;
    try {
        output = backend_it->second->summarize({*task, text, config_.max_summary_tokens});
    } catch (const ValidationError& e) {
        return ApiResponse::from(ApiError::invalid_request(e.what()));
    } catch (const std::exception& e) {
        return ApiResponse::from(ApiError::backend_unavailable(e.what()));
    }

    SummaryRecord record;
    try {
        record = store_->insert_summary(text, output.summary);
    } catch (const std::exception& e) {
        return ApiResponse::from(ApiError::storage_error(e.what()));
    }

    ojson res;
    res["id"] = record.id;
    res["model"] = to_string(*task);
    res["summary"] = record.summarized;
    res["created_at"] = format_timestamp(record.created_time);
    res["truncated_input"] = output.truncated_input;
    return {200, res.dump(-1, ' ', false, ojson::error_handler_t::replace)};
}

ApiResponse Service::handle_history(std::optional<std::string_view> limit_param,
                                    std::optional<std::string_view> offset_param) const {
    std::size_t limit = kDefaultHistoryLimit, offset = 0;
    if (limit_param) {
        auto v = parse_count(*limit_param);
        if (!v || *v == 0 || *v > kMaxHistoryLimit)
            return ApiResponse::from(ApiError::invalid_request("'limit' must be an integer in [1, 1000]"));
        limit = *v;
    }
    if (offset_param) {
        auto v = parse_count(*offset_param);
        if (!v) return ApiResponse::from(ApiError::invalid_request("'offset' must be a non-negative integer"));
        offset = *v;
    }

    ojson res;
    try {
        ojson items = ojson::array();
        for (const auto& r : store_->list_summaries(limit, offset)) {
            ojson item;
            item["id"] = r.id;
            item["input"] = r.input;
            item["summary"] = r.summarized;
            item["created_at"] = format_timestamp(r.created_time);
            items.push_back(std::move(item));
        }
        res["items"] = std::move(items);
        res["total"] = store_->count();
    } catch (const std::exception& e) {
        return ApiResponse::from(ApiError::storage_error(e.what()));
    }
    return {200, res.dump(-1, ' ', false, ojson::error_handler_t::replace)};
}

ApiResponse Service::handle_health() const {
    ojson res;
    res["status"] = "ok";
    bool store_ok = false;
    try {
        store_ok = store_ && store_->ping();
    } catch (...) {
        store_ok = false;
    }
    res["store"] = store_ok ? "ok" : "down";

    if (backends_.empty()) {
        res["backend"] = "unconfigured";
    } else {
        bool all = true;
        for (const auto& [task, backend] : backends_) {
            try {
                all = all && backend && backend->healthy();
            } catch (...) {
                all = false;
            }
        }
        res["backend"] = all ? "ok" : "down";
    }
    return ok(res);
}

}  // namespace medsum
