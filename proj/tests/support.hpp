#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "medsum/backends.hpp"
#include "medsum/embeddings.hpp"
#include "medsum/errors.hpp"
#include "medsum/store.hpp"

namespace testing {

inline std::filesystem::path source_dir() { return MEDSUM_SOURCE_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "medsum") {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Maps each known word to its own basis vector; unknown words get the zero vector.
class OrthogonalProvider : public medsum::EmbeddingProvider {
public:
    explicit OrthogonalProvider(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {}
    std::size_t dim() const override { return vocab_.size(); }
    std::vector<medsum::EmbeddingVector> embed_tokens(std::span<const std::string> tokens) const override {
        std::vector<medsum::EmbeddingVector> out;
        for (const auto& t : tokens) {
            medsum::EmbeddingVector v(vocab_.size(), 0.0);
            for (std::size_t i = 0; i < vocab_.size(); ++i)
                if (vocab_[i] == t) v[i] = 1.0;
            out.push_back(std::move(v));
        }
        return out;
    }
    std::string describe() const override { return "orthogonal"; }

private:
    std::vector<std::string> vocab_;
};

class ThrowingProvider : public medsum::EmbeddingProvider {
public:
    std::size_t dim() const override { return 8; }
    std::vector<medsum::EmbeddingVector> embed_tokens(std::span<const std::string>) const override {
        throw medsum::ProviderError("embedding service down", "http://stub/embed", 0);
    }
    std::string describe() const override { return "throwing"; }
};

/// Backend double: fixed answer, or a failure on every call.
class StubSummarizer : public medsum::Summarizer {
public:
    enum class Mode { Answer, Unavailable, Degenerate };
    explicit StubSummarizer(Mode mode = Mode::Answer, std::string answer = "stub summary", std::string id = "stub")
        : mode_(mode), answer_(std::move(answer)), id_(std::move(id)) {}

    medsum::SummaryOutput summarize(const medsum::SummarizeRequest& req) const override {
        ++calls;
        if (mode_ == Mode::Unavailable) throw medsum::BackendUnavailable("stub backend is down");
        if (mode_ == Mode::Degenerate) throw medsum::DegenerateOutput("stub returned nothing");
        medsum::SummaryOutput out;
        out.summary = answer_;
        out.backend_id = id_;
        out.task = req.task;
        return out;
    }
    std::string id() const override { return id_; }
    bool healthy() const override { return mode_ == Mode::Answer; }

    mutable std::atomic<int> calls{0};

private:
    Mode mode_;
    std::string answer_;
    std::string id_;
};

/// Store double whose writes (and optionally reads) fail.
class FailingStore : public medsum::SummaryStore {
public:
    explicit FailingStore(bool reads_fail = false) : reads_fail_(reads_fail) {}
    medsum::SummaryRecord insert_summary(std::string_view, std::string_view) override {
        throw medsum::StorageError("disk full");
    }
    std::vector<medsum::SummaryRecord> list_summaries(std::size_t, std::size_t) override {
        if (reads_fail_) throw medsum::StorageError("database is locked");
        return {};
    }
    std::optional<medsum::SummaryRecord> get_summary(std::string_view) override { return std::nullopt; }
    std::size_t count() override {
        if (reads_fail_) throw medsum::StorageError("database is locked");
        return 0;
    }
    bool ping() override { return !reads_fail_; }

private:
    bool reads_fail_;
};

inline std::vector<std::string> random_tokens(std::mt19937_64& rng, std::size_t max_len, std::size_t alphabet,
                                              std::size_t min_len = 0) {
    std::uniform_int_distribution<std::size_t> len(min_len, max_len), sym(0, alphabet - 1);
    std::vector<std::string> out(len(rng));
    for (auto& t : out) t = std::string(1, static_cast<char>('a' + sym(rng)));
    return out;
}

}  // namespace testing
