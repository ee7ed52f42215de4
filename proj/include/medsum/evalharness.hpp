#pragma once

// Evaluation harness: run a backend over a task corpus, score each sample with
// the four metrics, aggregate per length bucket, compare two backends and emit
// table-shaped reports (JSON / CSV) and per-sample SVG charts.

#include <array>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medsum/backends.hpp"
#include "medsum/corpus.hpp"
#include "medsum/embeddings.hpp"
#include "medsum/errors.hpp"
#include "medsum/metrics.hpp"

namespace medsum {

enum class Metric { Bleu = 0, RougeL = 1, BertScore = 2, SpacySimilarity = 3 };

inline constexpr std::array<Metric, 4> kAllMetrics = {Metric::Bleu, Metric::RougeL, Metric::BertScore,
                                                      Metric::SpacySimilarity};

using MetricValues = std::array<double, 4>;

/// Row labels of the single-model table: "BLEU", "ROUGE-L", "BERT Score", "SpaCy Similarity".
std::string_view table_label(Metric metric);
/// Row labels of the two-model comparison table ("BERTScore" without the space).
std::string_view comparison_label(Metric metric);
/// Machine keys: "bleu", "rouge_l", "bert_score", "spacy_similarity".
std::string_view metric_key(Metric metric);
std::optional<Metric> parse_metric(std::string_view key);

/// BLEU score, ROUGE-L F, BERTScore F1, sentence cosine.
MetricValues headline_values(const MetricReport& report);

struct SampleScore {
    std::string entry_id;
    TaskKind task = TaskKind::Passage;
    LengthBucket bucket = LengthBucket::Short;
    std::size_t input_words = 0;
    MetricReport report;
    std::string backend_id;
    std::string summary;
    bool degenerate = false;
    std::string error;  // why the sample is degenerate, empty otherwise
};

struct EvalConfig {
    BucketConfig buckets;
    ScoringParams scoring;
    std::size_t max_summary_tokens = 128;
    std::size_t workers = 1;
    const std::atomic<bool>* cancel = nullptr;  // polled between samples
};

/// An embedding-provider failure (or cancellation) stopped the run.
class EvalAborted : public Error {
public:
    EvalAborted(const std::string& what, std::size_t completed, bool cancelled)
        : Error(what), completed_(completed), cancelled_(cancelled) {}
    std::size_t completed() const noexcept { return completed_; }
    bool cancelled() const noexcept { return cancelled_; }

private:
    std::size_t completed_;
    bool cancelled_;
};

/// Summarizes every entry, scores it against its target and buckets it by
/// input length. Results come back sorted by entry id whatever the worker
/// count. Backend failures produce degenerate all-zero samples; provider
/// failures throw EvalAborted.
std::vector<SampleScore> run_eval(std::span<const DatasetEntry> corpus, TaskKind task, const Summarizer& backend,
                                  const EmbeddingProvider& provider, const EvalConfig& config);

struct BucketAggregate {
    LengthBucket bucket = LengthBucket::Short;
    std::size_t count = 0;
    std::optional<MetricValues> means;  // nullopt for an empty bucket
};

struct AggregateReport {
    std::string backend_id;
    TaskKind task = TaskKind::Passage;
    std::optional<MetricValues> overall;
    std::array<BucketAggregate, 3> buckets{};
    std::size_t sample_count = 0;
    std::size_t degenerate_count = 0;
};

/// Arithmetic means overall and per bucket; degenerate samples count as zeros.
/// Throws ValidationError on mixed backends or tasks, or a sample whose bucket
/// disagrees with `config`.
AggregateReport aggregate(std::span<const SampleScore> scores, const BucketConfig& config);

struct ComparedSample {
    std::string entry_id;
    LengthBucket bucket = LengthBucket::Short;
    std::size_t input_words = 0;
    MetricValues a{};
    MetricValues b{};
};

struct ComparisonReport {
    TaskKind task = TaskKind::Passage;
    AggregateReport a;
    AggregateReport b;
    std::vector<ComparedSample> samples;  // ordered by (bucket, entry_id)
};

/// Throws ValidationError when the tasks differ or the entry-id sets differ
/// (message lists the symmetric difference).
ComparisonReport compare(std::span<const SampleScore> a, std::span<const SampleScore> b,
                         const BucketConfig& config);

enum class ReportFormat { Json, Csv };

std::string emit_report(const AggregateReport& report, ReportFormat format);
std::string emit_report(const ComparisonReport& report, ReportFormat format);

/// Per-sample line chart: backend A blue, backend B orange, over green/yellow/red
/// bands for short/medium/long inputs. Throws ValidationError on an empty series.
std::string emit_chart_svg(const ComparisonReport& report, Metric metric);

/// Full-precision JSON-lines, one SampleScore per line.
std::string scores_to_jsonl(std::span<const SampleScore> scores);
std::vector<SampleScore> scores_from_jsonl(std::string_view text);

// ---------------------------------------------------------------------------
// Run directories: scores.jsonl, aggregate.json, aggregate.csv, manifest.json.

struct RunManifest {
    std::string task;
    std::string backend_id;
    std::string backend_spec;
    std::string provider;
    BucketConfig buckets;
    ScoringParams scoring;
    std::size_t max_summary_tokens = 128;
    std::string corpus_sha256;
    std::size_t entry_count = 0;
    std::string created_at;  // the only clock value in a run directory
    std::string status = "complete";
};

/// Hex SHA-256 over the canonical JSON-lines form of the corpus.
std::string corpus_hash(std::span<const DatasetEntry> corpus);

std::string manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(std::string_view text);

struct RunDirectory {
    std::vector<SampleScore> scores;
    RunManifest manifest;
};

void write_run(const std::filesystem::path& dir, std::span<const SampleScore> scores,
               const AggregateReport& aggregate, const RunManifest& manifest);
RunDirectory read_run(const std::filesystem::path& dir);

/// Writes comparison.json, comparison.csv and, when `charts` is set, one
/// chart_<metric>.svg per metric.
void write_comparison(const std::filesystem::path& dir, const ComparisonReport& report, bool charts);

}  // namespace medsum
