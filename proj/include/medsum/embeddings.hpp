#pragma once

// Token and text embedding providers behind BERTScore and sentence similarity.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

namespace medsum {

using EmbeddingVector = std::vector<double>;

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dim() const = 0;

    /// One vector per token, order preserved. Throws ProviderError.
    virtual std::vector<EmbeddingVector> embed_tokens(std::span<const std::string> tokens) const = 0;

    /// Mean-of-token-vectors per text unless the provider has native text vectors.
    virtual std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts) const;

    /// Short description recorded in run manifests, e.g. "det:seed=7:dim=64".
    virtual std::string describe() const = 0;
};

/// Offline provider: each token maps to a unit-length Gaussian vector drawn
/// from a counter-based generator keyed by (seed, FNV-1a hash of the token).
/// Identical tokens give bit-identical vectors in every process.
class DeterministicProvider final : public EmbeddingProvider {
public:
    static constexpr std::size_t kMinDim = 8;
    static constexpr std::size_t kDefaultDim = 64;

    explicit DeterministicProvider(std::uint64_t seed = 0, std::size_t dim = kDefaultDim);

    std::size_t dim() const override { return dim_; }
    std::uint64_t seed() const { return seed_; }
    std::vector<EmbeddingVector> embed_tokens(std::span<const std::string> tokens) const override;
    std::string describe() const override;

    EmbeddingVector embed_token(const std::string& token) const;

private:
    std::uint64_t seed_;
    std::size_t dim_;
};

struct RemoteProviderConfig {
    std::string endpoint;  // base URL; requests go to {endpoint}/embed
    std::string auth_token;
    std::chrono::milliseconds timeout{10000};
    std::size_t batch_size = 64;
    std::size_t max_in_flight = 4;
    bool native_text_vectors = false;
    std::size_t expected_dim = 0;  // 0: accept whatever the first response reports

    void validate() const;
};

/// POST {endpoint}/embed  {"texts": [...]}  ->  {"vectors": [[...], ...], "dim": D}
class RemoteProvider final : public EmbeddingProvider {
public:
    explicit RemoteProvider(RemoteProviderConfig config);

    std::size_t dim() const override;
    std::vector<EmbeddingVector> embed_tokens(std::span<const std::string> tokens) const override;
    std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts) const override;
    std::string describe() const override;

private:
    std::vector<EmbeddingVector> post_batches(std::span<const std::string> items) const;
    std::vector<EmbeddingVector> post_batch(std::span<const std::string> items,
                                            std::size_t batch_index) const;

    RemoteProviderConfig config_;
    mutable std::counting_semaphore<64> in_flight_;
    // Fixed by config or learned from the first response; 0 until known.
    mutable std::atomic<std::size_t> dim_;
};

/// Parses "det", "det:<seed>" or "det:<seed>:<dim>" and "remote" (reads
/// MEDSUM_EMBED_URL / MEDSUM_EMBED_KEY unless given explicitly).
std::shared_ptr<EmbeddingProvider> make_provider(const std::string& spec,
                                                 const std::string& remote_url = {},
                                                 const std::string& remote_key = {});

}  // namespace medsum
