#pragma once

// Summarizer backends: a remote completion endpoint driven by per-task
// instruction templates, and a deterministic extractive baseline.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "medsum/corpus.hpp"

namespace medsum {

struct SummarizeRequest {
    TaskKind task = TaskKind::Passage;
    std::string text;
    std::size_t max_summary_tokens = 128;

    /// Throws ValidationError for blank text or max_summary_tokens < 8.
    void validate() const;
};

struct SummaryOutput {
    std::string summary;
    std::string backend_id;
    TaskKind task = TaskKind::Passage;
    bool truncated_input = false;
    std::chrono::microseconds latency{0};
};

class PromptTemplate {
public:
    static constexpr std::string_view kPlaceholder = "{text}";

    /// Throws ValidationError unless `{text}` occurs exactly once.
    PromptTemplate(TaskKind task, std::string body);

    /// Built-in instruction for each task (identical to templates/<task>.txt).
    static PromptTemplate default_for(TaskKind task);
    static PromptTemplate load(TaskKind task, const std::filesystem::path& file);

    TaskKind task() const { return task_; }
    const std::string& body() const { return body_; }

    /// Substitutes the placeholder; `text` is inserted verbatim.
    std::string render(std::string_view text) const;

private:
    TaskKind task_;
    std::string body_;
};

struct Truncation {
    std::string text;
    bool truncated = false;
};

/// Estimated tokens for a word count: ceil(words * 1.3).
std::size_t estimate_tokens(std::size_t words);

/// Keeps the longest word-aligned head whose estimate fits `budget` (at least one word).
Truncation truncate_to_budget(std::string_view text, std::size_t budget);

/// Splits after '.', '!' or '?' when followed by whitespace or end of text.
/// Abbreviations are not recognized ("Dr. Smith" splits). No empty sentences.
std::vector<std::string> split_sentences(std::string_view text);

class Summarizer {
public:
    virtual ~Summarizer() = default;

    /// Throws BackendUnavailable or DegenerateOutput.
    virtual SummaryOutput summarize(const SummarizeRequest& request) const = 0;
    virtual std::string id() const = 0;
    /// True when the backend believes it can serve requests right now.
    virtual bool healthy() const { return true; }
};

/// Offline baseline. Passage: top-3 sentences by summed in-document term
/// frequency. Question: last sentence ending in '?', else the one with most
/// interrogative words, else the first. Conversation: up to 5 top sentences
/// from patient turns (all turns when none are marked). Selected sentences are
/// emitted in document order; ties go to the earlier sentence.
class ExtractiveSummarizer final : public Summarizer {
public:
    static constexpr std::string_view kId = "extractive-v1";

    SummaryOutput summarize(const SummarizeRequest& request) const override;
    std::string id() const override { return std::string(kId); }
};

/// Sentences an extractive summary may choose from, in document order.
std::vector<std::string> candidate_sentences(TaskKind task, std::string_view text);

struct BackendConfig {
    enum class Kind { Remote, Extractive };

    Kind kind = Kind::Extractive;
    std::string endpoint;
    std::string auth_token;
    std::string model = "medsum";
    std::chrono::milliseconds timeout{30000};
    int retries = 2;
    std::chrono::milliseconds backoff_base{200};
    std::size_t context_budget_tokens = 512;
    std::size_t max_in_flight = 4;

    void validate() const;
};

/// POST {endpoint}/v1/completions {"model","prompt","max_tokens"} -> {"text"}.
/// Retries connection failures, 429 and 5xx with exponential backoff.
class RemoteSummarizer final : public Summarizer {
public:
    RemoteSummarizer(BackendConfig config, std::map<TaskKind, PromptTemplate> templates = {});

    SummaryOutput summarize(const SummarizeRequest& request) const override;
    std::string id() const override { return "remote:" + config_.model; }
    bool healthy() const override;

    const BackendConfig& config() const { return config_; }

private:
    const PromptTemplate& template_for(TaskKind task) const;

    BackendConfig config_;
    std::map<TaskKind, PromptTemplate> templates_;
    mutable std::counting_semaphore<64> in_flight_;
};

/// Loads templates/<task>.txt from `dir` for every task, falling back to the
/// built-in defaults for files that are missing.
std::map<TaskKind, PromptTemplate> load_templates(const std::filesystem::path& dir);

std::shared_ptr<Summarizer> make_summarizer(const BackendConfig& config,
                                            const std::filesystem::path& template_dir = {});

}  // namespace medsum
