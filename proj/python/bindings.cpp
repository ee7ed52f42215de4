#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "medsum/backends.hpp"
#include "medsum/corpus.hpp"
#include "medsum/embeddings.hpp"
#include "medsum/errors.hpp"
#include "medsum/evalharness.hpp"
#include "medsum/metrics.hpp"
#include "medsum/store.hpp"

namespace py = pybind11;
using namespace medsum;

namespace {

TaskKind task_arg(const std::string& name) {
    auto t = parse_task(name);
    if (!t) throw ValidationError("unknown task '" + name + "'");
    return *t;
}

py::dict bleu_dict(const BleuBreakdown& b) {
    py::dict d;
    d["score"] = b.score;
    d["precisions"] = b.precisions;
    d["brevity_penalty"] = b.brevity_penalty;
    d["candidate_len"] = b.candidate_len;
    d["reference_len"] = b.reference_len;
    d["effective_order"] = b.effective_order;
    d["degenerate"] = b.degenerate;
    return d;
}

py::dict rouge_dict(const RougeLBreakdown& r) {
    py::dict d;
    d["score"] = r.score;
    d["lcs_len"] = r.lcs_len;
    d["precision"] = r.precision;
    d["recall"] = r.recall;
    d["beta"] = r.beta;
    return d;
}

py::dict bert_dict(const BertScoreBreakdown& b) {
    py::dict d;
    d["precision"] = b.precision;
    d["recall"] = b.recall;
    d["f1"] = b.f1;
    return d;
}

py::dict record_dict(const SummaryRecord& r) {
    py::dict d;
    d["id"] = r.id;
    d["input"] = r.input;
    d["summarized"] = r.summarized;
    d["created_time"] = format_timestamp(r.created_time);
    return d;
}

}  // namespace

PYBIND11_MODULE(_medsum, m) {
    m.doc() = "Medical summarization metrics, baseline summarizer and evaluation harness";

    auto base = py::register_exception<Error>(m, "MedsumError");
    py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<RecordError>(m, "RecordError", base.ptr());
    py::register_exception<StorageError>(m, "StorageError", base.ptr());

    m.def("tokenize", [](const std::string& text) { return tokenize(text); }, py::arg("text"));
    m.def("word_count", [](const std::string& text) { return word_count(text); }, py::arg("text"));

    m.def(
        "bleu",
        [](const std::vector<std::string>& cand, const std::vector<std::string>& ref, std::size_t max_order,
           double epsilon) { return bleu_dict(bleu(cand, ref, BleuParams::uniform(max_order, epsilon))); },
        py::arg("candidate"), py::arg("reference"), py::arg("max_order") = 4, py::arg("epsilon") = 1e-9);
    m.def(
        "rouge_l",
        [](const std::vector<std::string>& cand, const std::vector<std::string>& ref, double beta) {
            return rouge_dict(rouge_l(cand, ref, beta));
        },
        py::arg("candidate"), py::arg("reference"), py::arg("beta") = 1.0);
    m.def(
        "lcs_length",
        [](const std::vector<std::string>& a, const std::vector<std::string>& b) { return lcs_length(a, b); },
        py::arg("a"), py::arg("b"));
    m.def(
        "bert_score",
        [](const std::vector<std::string>& cand, const std::vector<std::string>& ref, std::uint64_t seed,
           std::size_t dim) { return bert_dict(bert_score(cand, ref, DeterministicProvider(seed, dim))); },
        py::arg("candidate"), py::arg("reference"), py::arg("seed") = 0, py::arg("dim") = 64);
    m.def(
        "embed_token",
        [](const std::string& token, std::uint64_t seed, std::size_t dim) {
            return DeterministicProvider(seed, dim).embed_token(token);
        },
        py::arg("token"), py::arg("seed") = 0, py::arg("dim") = 64);
    m.def(
        "score_pair",
        [](const std::string& cand, const std::string& ref, std::uint64_t seed, std::size_t dim) {
            const auto r = score_pair(cand, ref, DeterministicProvider(seed, dim));
            py::dict d;
            d["bleu"] = bleu_dict(r.bleu);
            d["rouge_l"] = rouge_dict(r.rouge_l);
            d["bert_score"] = bert_dict(r.bert);
            d["spacy_similarity"] = r.spacy_sim;
            return d;
        },
        py::arg("candidate"), py::arg("reference"), py::arg("seed") = 0, py::arg("dim") = 64);

    m.def(
        "parse_dataset",
        [](const std::string& raw, bool strict) {
            const auto parsed = parse_dataset(raw, strict ? Strictness::Strict : Strictness::Lenient);
            py::list entries, skipped;
            for (const auto& e : parsed.entries) {
                py::dict d;
                d["id"] = e.id;
                d["inputs"] = e.inputs;
                d["target"] = e.target;
                d["task"] = std::string(to_string(classify_task(e)));
                entries.append(d);
            }
            for (const auto& s : parsed.skipped) skipped.append(py::make_tuple(s.index, s.message));
            return py::make_tuple(entries, skipped);
        },
        py::arg("raw"), py::arg("strict") = false);
    m.def(
        "assign_bucket",
        [](std::size_t words, const std::string& task) {
            return std::string(to_string(assign_bucket(words, BucketConfig::defaults(task_arg(task)))));
        },
        py::arg("words"), py::arg("task"));

    m.def(
        "summarize",
        [](const std::string& task, const std::string& text, std::size_t max_summary_tokens) {
            py::gil_scoped_release release;
            return ExtractiveSummarizer().summarize({task_arg(task), text, max_summary_tokens}).summary;
        },
        py::arg("task"), py::arg("text"), py::arg("max_summary_tokens") = 128,
        "Summarize with the built-in extractive baseline.");

    m.def(
        "evaluate",
        [](const std::string& corpus, const std::string& task, std::uint64_t seed, std::size_t workers) {
            const TaskKind kind = task_arg(task);
            const auto parsed = parse_dataset(corpus);
            EvalConfig config;
            config.buckets = BucketConfig::defaults(kind);
            config.workers = workers;
            std::string json, csv;
            {
                py::gil_scoped_release release;
                ExtractiveSummarizer backend;
                DeterministicProvider provider(seed);
                const auto scores = run_eval(parsed.entries, kind, backend, provider, config);
                const auto agg = aggregate(scores, config.buckets);
                json = emit_report(agg, ReportFormat::Json);
                csv = emit_report(agg, ReportFormat::Csv);
            }
            return py::make_tuple(json, csv);
        },
        py::arg("corpus"), py::arg("task"), py::arg("seed") = 0, py::arg("workers") = 1,
        "Run the extractive baseline over a corpus; returns (aggregate JSON, aggregate CSV).");

    py::class_<SqliteStore>(m, "Store")
        .def(py::init<const std::string&>(), py::arg("url"))
        .def("insert", [](SqliteStore& s, const std::string& input,
                          const std::string& summarized) { return record_dict(s.insert_summary(input, summarized)); })
        .def(
            "list",
            [](SqliteStore& s, std::size_t limit, std::size_t offset) {
                py::list out;
                for (const auto& r : s.list_summaries(limit, offset)) out.append(record_dict(r));
                return out;
            },
            py::arg("limit") = 20, py::arg("offset") = 0)
        .def("get",
             [](SqliteStore& s, const std::string& id) -> py::object {
                 auto r = s.get_summary(id);
                 if (!r) return py::none();
                 return record_dict(*r);
             })
        .def("count", &SqliteStore::count);
}
