#include "medsum/embeddings.hpp"

#include <cmath>
#include <cstdlib>
#include <numbers>

#include <nlohmann/json.hpp>

#include "http_client.hpp"
#include "medsum/errors.hpp"
#include "medsum/metrics.hpp"

namespace medsum {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

std::vector<EmbeddingVector> EmbeddingProvider::embed_texts(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(sentence_embedding(t, *this));
    return out;
}

DeterministicProvider::DeterministicProvider(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {
    if (dim_ < kMinDim)
        throw ValidationError("deterministic provider dim must be >= " + std::to_string(kMinDim));
}

EmbeddingVector DeterministicProvider::embed_token(const std::string& token) const {
    // Counter-based stream: component pair k draws from mix64(key + (2k+1)γ), mix64(key + (2k+2)γ).
    const std::uint64_t key = mix64(fnv1a64(token) ^ mix64(seed_));
    EmbeddingVector v(dim_);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < dim_; i += 2) {
        const std::uint64_t a = mix64(key + (i + 1) * kGamma);
        const std::uint64_t b = mix64(key + (i + 2) * kGamma);
        const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;        // [0, 1)
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        v[i] = r * std::cos(theta);
        if (i + 1 < dim_) v[i + 1] = r * std::sin(theta);
    }
    for (double x : v) norm2 += x * x;
    const double norm = std::sqrt(norm2);
    for (double& x : v) x /= norm;
    return v;
}

std::vector<EmbeddingVector> DeterministicProvider::embed_tokens(std::span<const std::string> tokens) const {
    std::vector<EmbeddingVector> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(embed_token(t));
    return out;
}

std::string DeterministicProvider::describe() const {
    return "det:seed=" + std::to_string(seed_) + ":dim=" + std::to_string(dim_);
}

void RemoteProviderConfig::validate() const {
    if (endpoint.empty()) throw ValidationError("remote provider requires an endpoint URL");
    if (timeout.count() <= 0) throw ValidationError("remote provider timeout must be > 0");
    if (batch_size == 0) throw ValidationError("remote provider batch_size must be >= 1");
    if (max_in_flight == 0 || max_in_flight > 64)
        throw ValidationError("remote provider max_in_flight must be in [1, 64]");
}

RemoteProvider::RemoteProvider(RemoteProviderConfig config)
    : config_((config.validate(), std::move(config))),
      in_flight_(static_cast<std::ptrdiff_t>(config_.max_in_flight)),
      dim_(config_.expected_dim) {}

std::size_t RemoteProvider::dim() const { return dim_.load(); }

std::string RemoteProvider::describe() const {
    return "remote:" + config_.endpoint + (config_.native_text_vectors ? ":native" : "");
}

std::vector<EmbeddingVector> RemoteProvider::post_batch(std::span<const std::string> items,
                                                        std::size_t batch_index) const {
    const auto ep = detail::Endpoint::parse(config_.endpoint);
    const std::string url = ep.url_for("/embed");
    nlohmann::json body;
    body["texts"] = std::vector<std::string>(items.begin(), items.end());

    std::string error;
    std::optional<detail::HttpResult> res;
    {
        in_flight_.acquire();
        struct Release {
            std::counting_semaphore<64>& s;
            ~Release() { s.release(); }
        } release{in_flight_};
        res = detail::post_json(ep, "/embed", body.dump(), config_.auth_token, config_.timeout, error);
    }
    if (!res) throw ProviderError("embedding request to " + url + " failed: " + error, url, batch_index);
    if (res->status != 200)
        throw ProviderError("embedding request to " + url + " returned HTTP " + std::to_string(res->status),
                            url, batch_index);

    std::vector<EmbeddingVector> vectors;
    std::size_t reported_dim = 0;
    try {
        auto doc = nlohmann::json::parse(res->body);
        reported_dim = doc.at("dim").get<std::size_t>();
        vectors = doc.at("vectors").get<std::vector<EmbeddingVector>>();
    } catch (const nlohmann::json::exception& e) {
        throw ProviderError("embedding response from " + url + " is malformed: " + e.what(), url, batch_index);
    }
    if (vectors.size() != items.size())
        throw ProviderError("embedding response from " + url + " has " + std::to_string(vectors.size()) +
                                " vectors for " + std::to_string(items.size()) + " texts",
                            url, batch_index);
    std::size_t expected = 0;
    if (!dim_.compare_exchange_strong(expected, reported_dim)) {
        if (expected != reported_dim)
            throw ProviderError("embedding dim mismatch from " + url + ": expected " + std::to_string(expected) +
                                    ", got " + std::to_string(reported_dim),
                                url, batch_index);
    }
    for (const auto& v : vectors) {
        if (v.size() != reported_dim)
            throw ProviderError("embedding vector length differs from reported dim at " + url, url, batch_index);
        for (double x : v)
            if (!std::isfinite(x)) throw ProviderError("non-finite embedding component from " + url, url, batch_index);
    }
    return vectors;
}

std::vector<EmbeddingVector> RemoteProvider::post_batches(std::span<const std::string> items) const {
    std::vector<EmbeddingVector> out;
    out.reserve(items.size());
    for (std::size_t start = 0, batch = 0; start < items.size(); start += config_.batch_size, ++batch) {
        auto part = items.subspan(start, std::min(config_.batch_size, items.size() - start));
        auto vectors = post_batch(part, batch);
        for (auto& v : vectors) out.push_back(std::move(v));
    }
    return out;
}

std::vector<EmbeddingVector> RemoteProvider::embed_tokens(std::span<const std::string> tokens) const {
    return post_batches(tokens);
}

std::vector<EmbeddingVector> RemoteProvider::embed_texts(std::span<const std::string> texts) const {
    if (config_.native_text_vectors) return post_batches(texts);
    return EmbeddingProvider::embed_texts(texts);
}

namespace {

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        auto v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ValidationError("invalid " + what + " '" + s + "'");
    }
}

std::string explicit_or_env(const std::string& given, const char* name) {
    if (!given.empty()) return given;
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
}

}  // namespace

std::shared_ptr<EmbeddingProvider> make_provider(const std::string& spec, const std::string& remote_url,
                                                 const std::string& remote_key) {
    std::vector<std::string> parts;
    for (std::size_t start = 0;;) {
        std::size_t colon = spec.find(':', start);
        parts.push_back(spec.substr(start, colon - start));
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts[0] == "det" || parts[0] == "deterministic") {
        if (parts.size() > 3) throw ValidationError("provider spec '" + spec + "' has too many fields");
        std::uint64_t seed = parts.size() > 1 ? parse_u64(parts[1], "provider seed") : 0;
        std::size_t dim = parts.size() > 2 ? parse_u64(parts[2], "provider dim") : DeterministicProvider::kDefaultDim;
        return std::make_shared<DeterministicProvider>(seed, dim);
    }
    if (parts[0] == "remote") {
        if (parts.size() > 2 || (parts.size() == 2 && parts[1] != "native"))
            throw ValidationError("provider spec '" + spec + "' must be remote or remote:native");
        RemoteProviderConfig cfg;
        cfg.endpoint = explicit_or_env(remote_url, "MEDSUM_EMBED_URL");
        cfg.auth_token = explicit_or_env(remote_key, "MEDSUM_EMBED_KEY");
        cfg.native_text_vectors = parts.size() > 1 && parts[1] == "native";
        return std::make_shared<RemoteProvider>(std::move(cfg));
    }
    throw ValidationError("unknown provider spec '" + spec + "' (expected det[:seed[:dim]] or remote)");
}

}  // namespace medsum
