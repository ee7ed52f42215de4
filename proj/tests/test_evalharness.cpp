#include <doctest.h>

#include <regex>

#include <nlohmann/json.hpp>

#include "medsum/evalharness.hpp"
#include "support.hpp"

using namespace medsum;

namespace {

std::vector<DatasetEntry> mini_corpus() {
    return parse_dataset(testing::slurp(testing::source_dir() / "tests/data/mini_passage.jsonl")).entries;
}

SampleScore fake_sample(std::string id, std::size_t words, double bleu_score, std::string backend = "fake") {
    SampleScore s;
    s.entry_id = std::move(id);
    s.input_words = words;
    s.bucket = assign_bucket(words, BucketConfig::defaults(TaskKind::Passage));
    s.backend_id = std::move(backend);
    s.report.bleu.score = bleu_score;
    s.report.rouge_l.score = 0.5;
    s.report.bert.f1 = 0.25;
    s.report.spacy_sim = 1.0;
    return s;
}

EvalConfig passage_config(std::size_t workers = 1) {
    EvalConfig c;
    c.buckets = BucketConfig::defaults(TaskKind::Passage);
    c.workers = workers;
    return c;
}

}  // namespace

TEST_CASE("metric labels") {
    CHECK(table_label(Metric::BertScore) == "BERT Score");
    CHECK(comparison_label(Metric::BertScore) == "BERTScore");
    CHECK(table_label(Metric::SpacySimilarity) == "SpaCy Similarity");
    for (Metric m : kAllMetrics) CHECK(parse_metric(metric_key(m)) == m);
}

TEST_CASE("run_eval basics") {
    ExtractiveSummarizer backend;
    DeterministicProvider provider(0);
    CHECK(run_eval({}, TaskKind::Passage, backend, provider, passage_config()).empty());

    auto corpus = mini_corpus();
    std::reverse(corpus.begin(), corpus.end());
    const auto scores = run_eval(corpus, TaskKind::Passage, backend, provider, passage_config());
    REQUIRE(scores.size() == 10);
    CHECK(std::is_sorted(scores.begin(), scores.end(),
                         [](const auto& a, const auto& b) { return a.entry_id < b.entry_id; }));
    for (const auto& s : scores) {
        CHECK_FALSE(s.degenerate);
        CHECK(s.backend_id == "extractive-v1");
        CHECK(s.bucket == assign_bucket(s.input_words, BucketConfig::defaults(TaskKind::Passage)));
    }
}

TEST_CASE("run_eval output does not depend on worker count") {
    ExtractiveSummarizer backend;
    DeterministicProvider provider(3);
    const auto corpus = mini_corpus();
    const auto one = scores_to_jsonl(run_eval(corpus, TaskKind::Passage, backend, provider, passage_config(1)));
    const auto four = scores_to_jsonl(run_eval(corpus, TaskKind::Passage, backend, provider, passage_config(4)));
    CHECK(one == four);
}

TEST_CASE("backend failures become degenerate samples; provider failures abort") {
    const auto corpus = mini_corpus();
    const std::vector<DatasetEntry> three(corpus.begin(), corpus.begin() + 3);
    testing::StubSummarizer down(testing::StubSummarizer::Mode::Unavailable);
    DeterministicProvider provider(0);
    const auto scores = run_eval(three, TaskKind::Passage, down, provider, passage_config(2));
    REQUIRE(scores.size() == 3);
    for (const auto& s : scores) {
        CHECK(s.degenerate);
        CHECK(s.error.find("down") != std::string::npos);
    }
    const auto agg = aggregate(scores, passage_config().buckets);
    CHECK(agg.degenerate_count == 3);
    CHECK((*agg.overall)[0] == 0.0);

    testing::StubSummarizer ok;
    testing::ThrowingProvider broken;
    try {
        run_eval(three, TaskKind::Passage, ok, broken, passage_config());
        FAIL("expected EvalAborted");
    } catch (const EvalAborted& e) {
        CHECK(e.completed() == 0);
        CHECK_FALSE(e.cancelled());
        CHECK(std::string(e.what()).find("embedding service down") != std::string::npos);
    }

    std::atomic<bool> cancel{true};
    auto cfg = passage_config();
    cfg.cancel = &cancel;
    try {
        run_eval(three, TaskKind::Passage, ok, provider, cfg);
        FAIL("expected EvalAborted");
    } catch (const EvalAborted& e) {
        CHECK(e.cancelled());
    }
}

TEST_CASE("aggregate means") {
    const auto cfg = BucketConfig::defaults(TaskKind::Passage);
    std::vector<SampleScore> one{fake_sample("a", 22, 0.2)};
    auto r1 = aggregate(one, cfg);
    CHECK((*r1.overall)[0] == doctest::Approx(0.2));
    CHECK((*r1.overall)[2] == doctest::Approx(0.25));

    std::vector<SampleScore> two{fake_sample("a", 22, 0.2), fake_sample("b", 23, 0.4)};
    auto r2 = aggregate(two, cfg);
    CHECK((*r2.overall)[0] == doctest::Approx(0.3));
    CHECK(r2.buckets[0].count == 2);
    CHECK_FALSE(r2.buckets[1].means.has_value());
    CHECK_FALSE(r2.buckets[2].means.has_value());

    std::vector<SampleScore> mixed{fake_sample("a", 22, 0.2), fake_sample("b", 22, 0.2, "other")};
    CHECK_THROWS_AS(aggregate(mixed, cfg), ValidationError);
    auto wrong = fake_sample("a", 22, 0.2);
    wrong.bucket = LengthBucket::Long;
    std::vector<SampleScore> bad{wrong};
    CHECK_THROWS_AS(aggregate(bad, cfg), ValidationError);

    const auto json = nlohmann::json::parse(emit_report(r2, ReportFormat::Json));
    for (const auto& [key, value] : json["buckets"][1]["means"].items()) CHECK_MESSAGE(value.is_null(), key);
    CHECK(json["buckets"][0]["means"]["bleu"] == doctest::Approx(0.3));
}

TEST_CASE("compare") {
    const auto cfg = BucketConfig::defaults(TaskKind::Passage);
    std::vector<SampleScore> a{fake_sample("x", 120, 0.1), fake_sample("y", 22, 0.2), fake_sample("z", 60, 0.3)};
    const auto self = compare(a, a, cfg);
    REQUIRE(self.samples.size() == 3);
    CHECK(self.samples[0].entry_id == "y");
    CHECK(self.samples[1].entry_id == "z");
    CHECK(self.samples[2].entry_id == "x");
    for (const auto& s : self.samples) CHECK(s.a == s.b);

    std::vector<SampleScore> b{fake_sample("x", 120, 0.1), fake_sample("q", 22, 0.2)};
    try {
        compare(a, b, cfg);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("only in A: y z") != std::string::npos);
        CHECK(msg.find("only in B: q") != std::string::npos);
    }

    const auto empty = compare({}, {}, cfg);
    const auto doc = nlohmann::json::parse(emit_report(empty, ReportFormat::Json));
    CHECK(doc["samples"].is_array());
    CHECK(doc["samples"].empty());
}

TEST_CASE("report CSV shapes") {
    const auto cfg = BucketConfig::defaults(TaskKind::Passage);
    std::vector<SampleScore> a{fake_sample("y", 22, 0.123456)};
    const auto csv = emit_report(aggregate(a, cfg), ReportFormat::Csv);
    CHECK(csv == "metric,avg_score\nBLEU,0.1235\nROUGE-L,0.5000\nBERT Score,0.2500\nSpaCy Similarity,1.0000\n");

    std::vector<SampleScore> b{fake_sample("y", 22, 0.5, "other")};
    const auto cmp = emit_report(compare(a, b, cfg), ReportFormat::Csv);
    CHECK(cmp == "metric,fake,other\nBLEU,0.1235,0.5000\nROUGE-L,0.5000,0.5000\nBERTScore,0.2500,0.2500\n"
                 "SpaCy Similarity,1.0000,1.0000\n");
}

TEST_CASE("chart SVG conventions") {
    const auto cfg = BucketConfig::defaults(TaskKind::Passage);
    std::vector<SampleScore> one{fake_sample("y", 22, 0.5)};
    std::vector<SampleScore> other{fake_sample("y", 22, 0.7, "other")};
    const auto svg = emit_chart_svg(compare(one, other, cfg), Metric::Bleu);
    CHECK(svg.rfind("<svg", 0) == 0);
    const auto count = [&](const std::string& needle) {
        std::size_t n = 0;
        for (auto p = svg.find(needle); p != std::string::npos; p = svg.find(needle, p + 1)) ++n;
        return n;
    };
    CHECK(count("<circle") == 2);
    CHECK(count("class=\"band") == 1);
    CHECK(svg.find("#1f77b4") != std::string::npos);
    CHECK(svg.find("#ff7f0e") != std::string::npos);
    CHECK(svg.find("#2ca02c") != std::string::npos);

    std::vector<SampleScore> many{fake_sample("a", 22, 0.1), fake_sample("b", 60, 0.2), fake_sample("c", 120, 0.3)};
    const auto three = emit_chart_svg(compare(many, many, cfg), Metric::RougeL);
    CHECK(three.find("#ffd700") != std::string::npos);
    CHECK(three.find("#d62728") != std::string::npos);

    CHECK_THROWS_AS(emit_chart_svg(compare({}, {}, cfg), Metric::Bleu), ValidationError);
}

TEST_CASE("scores JSON-lines round-trip at full precision") {
    ExtractiveSummarizer backend;
    DeterministicProvider provider(0);
    const auto scores = run_eval(mini_corpus(), TaskKind::Passage, backend, provider, passage_config());
    const auto text = scores_to_jsonl(scores);
    const auto back = scores_from_jsonl(text);
    REQUIRE(back.size() == scores.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].entry_id == scores[i].entry_id);
        CHECK(back[i].report.bleu.score == scores[i].report.bleu.score);
        CHECK(back[i].report.bert.f1 == scores[i].report.bert.f1);
        CHECK(back[i].report.spacy_sim == scores[i].report.spacy_sim);
    }
    CHECK(scores_to_jsonl(back) == text);
}

TEST_CASE("run directories") {
    testing::TempDir dir;
    ExtractiveSummarizer backend;
    DeterministicProvider provider(0);
    const auto corpus = mini_corpus();
    const auto scores = run_eval(corpus, TaskKind::Passage, backend, provider, passage_config());
    RunManifest m;
    m.task = "passage";
    m.backend_id = backend.id();
    m.provider = provider.describe();
    m.buckets = BucketConfig::defaults(TaskKind::Passage);
    m.corpus_sha256 = corpus_hash(corpus);
    m.entry_count = corpus.size();
    m.created_at = "2024-01-01T00:00:00.000000Z";
    write_run(dir.path(), scores, aggregate(scores, m.buckets), m);
    for (const char* f : {"scores.jsonl", "aggregate.json", "aggregate.csv", "manifest.json"})
        CHECK(std::filesystem::exists(dir / f));

    const auto back = read_run(dir.path());
    CHECK(back.scores.size() == 10);
    CHECK(back.manifest.corpus_sha256 == m.corpus_sha256);
    CHECK(std::regex_match(m.corpus_sha256, std::regex("[0-9a-f]{64}")));

    m.status = "incomplete";
    testing::spit(dir / "manifest.json", manifest_to_json(m));
    CHECK_THROWS_AS(read_run(dir.path()), ValidationError);
}
