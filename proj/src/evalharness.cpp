#include "medsum/evalharness.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <thread>

namespace medsum {

std::string_view table_label(Metric metric) {
    switch (metric) {
        case Metric::Bleu: return "BLEU";
        case Metric::RougeL: return "ROUGE-L";
        case Metric::BertScore: return "BERT Score";
        case Metric::SpacySimilarity: return "SpaCy Similarity";
    }
    return "";
}

std::string_view comparison_label(Metric metric) {
    return metric == Metric::BertScore ? "BERTScore" : table_label(metric);
}

std::string_view metric_key(Metric metric) {
    switch (metric) {
        case Metric::Bleu: return "bleu";
        case Metric::RougeL: return "rouge_l";
        case Metric::BertScore: return "bert_score";
        case Metric::SpacySimilarity: return "spacy_similarity";
    }
    return "";
}

std::optional<Metric> parse_metric(std::string_view key) {
    for (Metric m : kAllMetrics)
        if (metric_key(m) == key) return m;
    return std::nullopt;
}

MetricValues headline_values(const MetricReport& report) {
    return {report.bleu.score, report.rouge_l.score, report.bert.f1, report.spacy_sim};
}

namespace {

SampleScore score_entry(const DatasetEntry& entry, TaskKind task, const Summarizer& backend,
                        const EmbeddingProvider& provider, const EvalConfig& config) {
    SampleScore s;
    s.entry_id = entry.id;
    s.task = task;
    s.input_words = word_count(entry.inputs);
    s.bucket = assign_bucket(s.input_words, config.buckets);
    s.backend_id = backend.id();

    SummarizeRequest req{task, entry.inputs, config.max_summary_tokens};
    try {
        s.summary = backend.summarize(req).summary;
    } catch (const std::exception& e) {
        // Backend trouble is a property of the sample, not of the run.
        s.degenerate = true;
        s.error = e.what();
        return s;
    }
    if (trim(s.summary).empty()) {
        s.degenerate = true;
        s.error = "empty summary";
        return s;
    }
    s.report = score_pair(s.summary, entry.target, provider, config.scoring);
    return s;
}

}  // namespace

std::vector<SampleScore> run_eval(std::span<const DatasetEntry> corpus, TaskKind task, const Summarizer& backend,
                                  const EmbeddingProvider& provider, const EvalConfig& config) {
    config.buckets.validate();
    config.scoring.bleu.validate();

    std::vector<const DatasetEntry*> order;
    order.reserve(corpus.size());
    for (const auto& e : corpus) order.push_back(&e);
    std::sort(order.begin(), order.end(), [](auto* x, auto* y) { return x->id < y->id; });

    std::vector<std::optional<SampleScore>> slots(order.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> completed{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::string first_error;
    bool cancelled = false;

    auto worker = [&] {
        while (!failed.load()) {
            if (config.cancel && config.cancel->load()) {
                std::lock_guard lock(error_mutex);
                if (!failed.exchange(true)) {
                    cancelled = true;
                    first_error = "evaluation cancelled";
                }
                return;
            }
            const std::size_t i = next.fetch_add(1);
            if (i >= order.size()) return;
            try {
                slots[i] = score_entry(*order[i], task, backend, provider, config);
                completed.fetch_add(1);
            } catch (const std::exception& e) {
                std::lock_guard lock(error_mutex);
                if (!failed.exchange(true))
                    first_error = "scoring entry '" + order[i]->id + "' failed: " + e.what();
                return;
            }
        }
    };

    const std::size_t width = std::clamp<std::size_t>(config.workers, 1, std::max<std::size_t>(order.size(), 1));
    if (width == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);
    }
    if (failed.load()) throw EvalAborted(first_error, completed.load(), cancelled);

    std::vector<SampleScore> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

AggregateReport aggregate(std::span<const SampleScore> scores, const BucketConfig& config) {
    config.validate();
    AggregateReport report;
    for (std::size_t b = 0; b < 3; ++b) report.buckets[b].bucket = kAllBuckets[b];
    if (scores.empty()) return report;

    report.backend_id = scores.front().backend_id;
    report.task = scores.front().task;
    MetricValues total{};
    std::array<MetricValues, 3> bucket_total{};
    for (const auto& s : scores) {
        if (s.backend_id != report.backend_id)
            throw ValidationError("aggregate: mixed backends '" + report.backend_id + "' and '" + s.backend_id + "'");
        if (s.task != report.task) throw ValidationError("aggregate: samples span more than one task");
        if (assign_bucket(s.input_words, config) != s.bucket)
            throw ValidationError("aggregate: sample '" + s.entry_id + "' is bucketed inconsistently");

        const auto values = s.degenerate ? MetricValues{} : headline_values(s.report);
        const auto b = static_cast<std::size_t>(s.bucket);
        for (std::size_t m = 0; m < 4; ++m) {
            total[m] += values[m];
            bucket_total[b][m] += values[m];
        }
        ++report.buckets[b].count;
        ++report.sample_count;
        if (s.degenerate) ++report.degenerate_count;
    }

    auto divide = [](MetricValues v, std::size_t n) {
        for (double& x : v) x /= static_cast<double>(n);
        return v;
    };
    report.overall = divide(total, report.sample_count);
    for (std::size_t b = 0; b < 3; ++b)
        if (report.buckets[b].count > 0) report.buckets[b].means = divide(bucket_total[b], report.buckets[b].count);
    return report;
}

ComparisonReport compare(std::span<const SampleScore> a, std::span<const SampleScore> b, const BucketConfig& config) {
    std::map<std::string, const SampleScore*> by_id_a, by_id_b;
    for (const auto& s : a) by_id_a.emplace(s.entry_id, &s);
    for (const auto& s : b) by_id_b.emplace(s.entry_id, &s);

    std::vector<std::string> only_a, only_b;
    for (const auto& [id, _] : by_id_a)
        if (!by_id_b.count(id)) only_a.push_back(id);
    for (const auto& [id, _] : by_id_b)
        if (!by_id_a.count(id)) only_b.push_back(id);
    if (!only_a.empty() || !only_b.empty()) {
        std::string msg = "compare: entry ids differ;";
        auto list = [&](const char* label, const std::vector<std::string>& ids) {
            if (ids.empty()) return;
            msg += std::string(" only in ") + label + ":";
            for (const auto& id : ids) msg += " " + id;
            msg += ";";
        };
        list("A", only_a);
        list("B", only_b);
        msg.pop_back();
        throw ValidationError(msg);
    }

    ComparisonReport report;
    report.a = aggregate(a, config);
    report.b = aggregate(b, config);
    if (!a.empty() && !b.empty() && report.a.task != report.b.task)
        throw ValidationError("compare: runs evaluate different tasks");
    report.task = a.empty() ? config.task : report.a.task;

    for (const auto& [id, sa] : by_id_a) {
        const SampleScore* sb = by_id_b.at(id);
        if (sa->input_words != sb->input_words)
            throw ValidationError("compare: entry '" + id + "' has different inputs in the two runs");
        ComparedSample c;
        c.entry_id = id;
        c.bucket = sa->bucket;
        c.input_words = sa->input_words;
        c.a = sa->degenerate ? MetricValues{} : headline_values(sa->report);
        c.b = sb->degenerate ? MetricValues{} : headline_values(sb->report);
        report.samples.push_back(std::move(c));
    }
    std::stable_sort(report.samples.begin(), report.samples.end(),
                     [](const auto& x, const auto& y) { return x.bucket < y.bucket; });
    return report;
}

}  // namespace medsum
