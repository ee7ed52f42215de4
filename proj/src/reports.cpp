#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "medsum/evalharness.hpp"

namespace medsum {

namespace {

using ojson = nlohmann::ordered_json;

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s(buf);
    // "-0.0000" reads as a sign error in a table.
    if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string fixed4(double v) { return fixed(v, 4); }

// nlohmann's dump with every float written to 4 decimals.
void dump_fixed(const ojson& j, int indent, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case ojson::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out += pad + ojson(key).dump() + ": ";
                dump_fixed(value, indent, depth + 1, out);
            }
            out += "\n" + close_pad + "}";
            return;
        }
        case ojson::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& value : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                dump_fixed(value, indent, depth + 1, out);
            }
            out += "\n" + close_pad + "]";
            return;
        }
        case ojson::value_t::number_float: out += fixed4(j.get<double>()); return;
        default: out += j.dump(); return;
    }
}

std::string to_fixed_json(const ojson& j) {
    std::string out;
    dump_fixed(j, 2, 0, out);
    out += '\n';
    return out;
}

ojson values_json(const std::optional<MetricValues>& values) {
    ojson j = ojson::object();
    for (Metric m : kAllMetrics) {
        if (values)
            j[std::string(metric_key(m))] = (*values)[static_cast<std::size_t>(m)];
        else
            j[std::string(metric_key(m))] = nullptr;
    }
    return j;
}

ojson aggregate_json(const AggregateReport& r) {
    ojson j;
    j["backend_id"] = r.backend_id;
    j["task"] = to_string(r.task);
    j["sample_count"] = r.sample_count;
    j["degenerate_count"] = r.degenerate_count;
    j["overall"] = values_json(r.overall);
    ojson buckets = ojson::array();
    for (const auto& b : r.buckets) {
        ojson bj;
        bj["bucket"] = to_string(b.bucket);
        bj["count"] = b.count;
        bj["means"] = values_json(b.means);
        buckets.push_back(std::move(bj));
    }
    j["buckets"] = std::move(buckets);
    return j;
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_value(const std::optional<MetricValues>& v, Metric m) {
    return v ? fixed4((*v)[static_cast<std::size_t>(m)]) : std::string();
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string emit_report(const AggregateReport& report, ReportFormat format) {
    if (format == ReportFormat::Json) return to_fixed_json(aggregate_json(report));
    std::string out = "metric,avg_score\n";
    for (Metric m : kAllMetrics) out += std::string(table_label(m)) + "," + csv_value(report.overall, m) + "\n";
    return out;
}

std::string emit_report(const ComparisonReport& report, ReportFormat format) {
    if (format == ReportFormat::Csv) {
        std::string out = "metric," + csv_field(report.a.backend_id) + "," + csv_field(report.b.backend_id) + "\n";
        for (Metric m : kAllMetrics)
            out += std::string(comparison_label(m)) + "," + csv_value(report.a.overall, m) + "," +
                   csv_value(report.b.overall, m) + "\n";
        return out;
    }
    ojson j;
    j["task"] = to_string(report.task);
    j["a"] = aggregate_json(report.a);
    j["b"] = aggregate_json(report.b);
    ojson samples = ojson::array();
    for (std::size_t i = 0; i < report.samples.size(); ++i) {
        const auto& s = report.samples[i];
        ojson sj;
        sj["index"] = i;
        sj["entry_id"] = s.entry_id;
        sj["bucket"] = to_string(s.bucket);
        sj["input_words"] = s.input_words;
        MetricValues delta{};
        for (std::size_t m = 0; m < 4; ++m) delta[m] = s.a[m] - s.b[m];
        sj["a"] = values_json(s.a);
        sj["b"] = values_json(s.b);
        sj["delta"] = values_json(delta);
        samples.push_back(std::move(sj));
    }
    j["samples"] = std::move(samples);
    return to_fixed_json(j);
}

std::string emit_chart_svg(const ComparisonReport& report, Metric metric) {
    const auto& samples = report.samples;
    if (samples.empty()) throw ValidationError("emit_chart_svg: comparison has no samples");
    const auto mi = static_cast<std::size_t>(metric);

    constexpr double kWidth = 960, kHeight = 420;
    constexpr double kLeft = 70, kRight = 20, kTop = 50, kBottom = 60;
    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    const double n = static_cast<double>(samples.size());
    const double slot = plot_w / n;

    double lo = 0.0;
    for (const auto& s : samples) lo = std::min({lo, s.a[mi], s.b[mi]});
    lo = std::floor(lo * 4.0) / 4.0;  // cosine-based scores can dip below zero
    const double hi = 1.0;
    auto x_of = [&](std::size_t i) { return kLeft + (static_cast<double>(i) + 0.5) * slot; };
    auto y_of = [&](double v) { return kTop + (hi - std::clamp(v, lo, hi)) / (hi - lo) * plot_h; };
    auto f2 = [](double v) { return fixed(v, 2); };

    const std::string title = std::string(table_label(metric)) + " per sample";
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f2(kWidth) << "\" height=\"" << f2(kHeight)
        << "\" viewBox=\"0 0 " << f2(kWidth) << " " << f2(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<title>" << xml_escape(title) << "</title>\n";
    svg << "<rect x=\"0\" y=\"0\" width=\"" << f2(kWidth) << "\" height=\"" << f2(kHeight) << "\" fill=\"#ffffff\"/>\n";

    // Bucket bands over contiguous runs of the same length class.
    static constexpr const char* kBandColor[3] = {"#2ca02c", "#ffd700", "#d62728"};
    svg << "<g id=\"bands\" fill-opacity=\"0.18\">\n";
    for (std::size_t start = 0; start < samples.size();) {
        std::size_t end = start;
        while (end < samples.size() && samples[end].bucket == samples[start].bucket) ++end;
        const auto b = static_cast<std::size_t>(samples[start].bucket);
        svg << "<rect class=\"band-" << to_string(samples[start].bucket) << "\" x=\""
            << f2(kLeft + static_cast<double>(start) * slot) << "\" y=\"" << f2(kTop) << "\" width=\""
            << f2(static_cast<double>(end - start) * slot) << "\" height=\"" << f2(plot_h) << "\" fill=\""
            << kBandColor[b] << "\"/>\n";
        start = end;
    }
    svg << "</g>\n";

    // Axes, y grid and ticks.
    svg << "<g id=\"axes\" stroke=\"#333333\" stroke-width=\"1\">\n";
    svg << "<line x1=\"" << f2(kLeft) << "\" y1=\"" << f2(kTop + plot_h) << "\" x2=\"" << f2(kLeft + plot_w)
        << "\" y2=\"" << f2(kTop + plot_h) << "\"/>\n";
    svg << "<line x1=\"" << f2(kLeft) << "\" y1=\"" << f2(kTop) << "\" x2=\"" << f2(kLeft) << "\" y2=\""
        << f2(kTop + plot_h) << "\"/>\n";
    svg << "</g>\n<g id=\"yticks\" text-anchor=\"end\">\n";
    for (double v = lo; v <= hi + 1e-9; v += 0.25) {
        svg << "<line x1=\"" << f2(kLeft - 4) << "\" y1=\"" << f2(y_of(v)) << "\" x2=\"" << f2(kLeft + plot_w)
            << "\" y2=\"" << f2(y_of(v)) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << f2(kLeft - 8) << "\" y=\"" << f2(y_of(v) + 4) << "\">" << f2(v) << "</text>\n";
    }
    svg << "</g>\n<g id=\"xticks\" text-anchor=\"middle\">\n";
    const std::size_t step = (samples.size() + 9) / 10;
    for (std::size_t i = 0; i < samples.size(); i += step)
        svg << "<text x=\"" << f2(x_of(i)) << "\" y=\"" << f2(kTop + plot_h + 18) << "\">" << i << "</text>\n";
    svg << "</g>\n";

    auto series = [&](const char* id, const char* color, bool use_a) {
        svg << "<g id=\"" << id << "\" stroke=\"" << color << "\" fill=\"" << color << "\">\n";
        svg << "<polyline fill=\"none\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double v = use_a ? samples[i].a[mi] : samples[i].b[mi];
            svg << (i ? " " : "") << f2(x_of(i)) << "," << f2(y_of(v));
        }
        svg << "\"/>\n";
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const double v = use_a ? samples[i].a[mi] : samples[i].b[mi];
            svg << "<circle cx=\"" << f2(x_of(i)) << "\" cy=\"" << f2(y_of(v)) << "\" r=\"3\"/>\n";
        }
        svg << "</g>\n";
    };
    series("series-a", "#1f77b4", true);
    series("series-b", "#ff7f0e", false);

    svg << "<text x=\"" << f2(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
        << xml_escape(title) << "</text>\n";
    svg << "<text x=\"" << f2(kLeft + plot_w / 2) << "\" y=\"" << f2(kHeight - 14)
        << "\" text-anchor=\"middle\">Sample index</text>\n";
    svg << "<text x=\"18\" y=\"" << f2(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
        << f2(kTop + plot_h / 2) << ")\">" << xml_escape(table_label(metric)) << "</text>\n";
    svg << "<g id=\"legend\">\n";
    svg << "<line x1=\"" << f2(kLeft + 10) << "\" y1=\"38\" x2=\"" << f2(kLeft + 30)
        << "\" y2=\"38\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << f2(kLeft + 36) << "\" y=\"42\">" << xml_escape(report.a.backend_id) << "</text>\n";
    svg << "<line x1=\"" << f2(kLeft + 250) << "\" y1=\"38\" x2=\"" << f2(kLeft + 270)
        << "\" y2=\"38\" stroke=\"#ff7f0e\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << f2(kLeft + 276) << "\" y=\"42\">" << xml_escape(report.b.backend_id) << "</text>\n";
    svg << "</g>\n</svg>\n";
    return svg.str();
}

// ---------------------------------------------------------------------------
// Sample scores as JSON-lines

namespace {

ojson sample_json(const SampleScore& s) {
    ojson j;
    j["entry_id"] = s.entry_id;
    j["task"] = to_string(s.task);
    j["bucket"] = to_string(s.bucket);
    j["input_words"] = s.input_words;
    j["backend_id"] = s.backend_id;
    j["degenerate"] = s.degenerate;
    if (!s.error.empty()) j["error"] = s.error;
    j["summary"] = s.summary;
    const auto& r = s.report;
    ojson bleu;
    bleu["score"] = r.bleu.score;
    bleu["precisions"] = r.bleu.precisions;
    bleu["brevity_penalty"] = r.bleu.brevity_penalty;
    bleu["candidate_len"] = r.bleu.candidate_len;
    bleu["reference_len"] = r.bleu.reference_len;
    bleu["effective_order"] = r.bleu.effective_order;
    bleu["degenerate"] = r.bleu.degenerate;
    j["bleu"] = std::move(bleu);
    ojson rouge;
    rouge["score"] = r.rouge_l.score;
    rouge["lcs_len"] = r.rouge_l.lcs_len;
    rouge["precision"] = r.rouge_l.precision;
    rouge["recall"] = r.rouge_l.recall;
    rouge["beta"] = r.rouge_l.beta;
    j["rouge_l"] = std::move(rouge);
    ojson bert;
    bert["precision"] = r.bert.precision;
    bert["recall"] = r.bert.recall;
    bert["f1"] = r.bert.f1;
    j["bert_score"] = std::move(bert);
    j["spacy_similarity"] = r.spacy_sim;
    return j;
}

template <typename E>
E enum_field(const ojson& j, const char* key, std::optional<E> (*parse)(std::string_view)) {
    const auto name = j.at(key).get<std::string>();
    auto v = parse(name);
    if (!v) throw ValidationError(std::string("unknown ") + key + " '" + name + "'");
    return *v;
}

SampleScore sample_from_json(const ojson& j) {
    SampleScore s;
    s.entry_id = j.at("entry_id").get<std::string>();
    s.task = enum_field<TaskKind>(j, "task", parse_task);
    s.bucket = enum_field<LengthBucket>(j, "bucket", parse_bucket);
    s.input_words = j.at("input_words").get<std::size_t>();
    s.backend_id = j.at("backend_id").get<std::string>();
    s.degenerate = j.at("degenerate").get<bool>();
    s.error = j.value("error", std::string());
    s.summary = j.at("summary").get<std::string>();
    const auto& b = j.at("bleu");
    s.report.bleu.score = b.at("score").get<double>();
    s.report.bleu.precisions = b.at("precisions").get<std::vector<double>>();
    s.report.bleu.brevity_penalty = b.at("brevity_penalty").get<double>();
    s.report.bleu.candidate_len = b.at("candidate_len").get<std::size_t>();
    s.report.bleu.reference_len = b.at("reference_len").get<std::size_t>();
    s.report.bleu.effective_order = b.at("effective_order").get<std::size_t>();
    s.report.bleu.degenerate = b.at("degenerate").get<bool>();
    const auto& r = j.at("rouge_l");
    s.report.rouge_l.score = r.at("score").get<double>();
    s.report.rouge_l.lcs_len = r.at("lcs_len").get<std::size_t>();
    s.report.rouge_l.precision = r.at("precision").get<double>();
    s.report.rouge_l.recall = r.at("recall").get<double>();
    s.report.rouge_l.beta = r.at("beta").get<double>();
    const auto& bs = j.at("bert_score");
    s.report.bert.precision = bs.at("precision").get<double>();
    s.report.bert.recall = bs.at("recall").get<double>();
    s.report.bert.f1 = bs.at("f1").get<double>();
    s.report.spacy_sim = j.at("spacy_similarity").get<double>();
    return s;
}

}  // namespace

std::string scores_to_jsonl(std::span<const SampleScore> scores) {
    std::string out;
    for (const auto& s : scores) {
        out += sample_json(s).dump();
        out += '\n';
    }
    return out;
}

std::vector<SampleScore> scores_from_jsonl(std::string_view text) {
    std::vector<SampleScore> out;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(sample_from_json(ojson::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("scores line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest and run directories

std::string corpus_hash(std::span<const DatasetEntry> corpus) {
    const std::string canonical = serialize_jsonl({corpus.begin(), corpus.end()});
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(canonical.data(), canonical.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex += kHex[digest[i] >> 4];
        hex += kHex[digest[i] & 0xF];
    }
    return hex;
}

std::string manifest_to_json(const RunManifest& m) {
    ojson j;
    j["status"] = m.status;
    j["task"] = m.task;
    j["backend_id"] = m.backend_id;
    j["backend_spec"] = m.backend_spec;
    j["provider"] = m.provider;
    j["buckets"] = {{"task", to_string(m.buckets.task)},
                    {"short_max", m.buckets.short_max},
                    {"medium_max", m.buckets.medium_max}};
    j["bleu"] = {{"max_order", m.scoring.bleu.max_order},
                 {"weights", m.scoring.bleu.weights},
                 {"epsilon", m.scoring.bleu.epsilon}};
    j["rouge_beta"] = m.scoring.rouge_beta;
    j["max_summary_tokens"] = m.max_summary_tokens;
    j["corpus_sha256"] = m.corpus_sha256;
    j["entry_count"] = m.entry_count;
    j["created_at"] = m.created_at;
    return j.dump(2) + "\n";
}

RunManifest manifest_from_json(std::string_view text) {
    try {
        auto j = ojson::parse(text);
        RunManifest m;
        m.status = j.at("status").get<std::string>();
        m.task = j.at("task").get<std::string>();
        m.backend_id = j.at("backend_id").get<std::string>();
        m.backend_spec = j.value("backend_spec", std::string());
        m.provider = j.at("provider").get<std::string>();
        const auto& b = j.at("buckets");
        m.buckets.task = enum_field<TaskKind>(b, "task", parse_task);
        m.buckets.short_max = b.at("short_max").get<std::size_t>();
        m.buckets.medium_max = b.at("medium_max").get<std::size_t>();
        const auto& bl = j.at("bleu");
        m.scoring.bleu.max_order = bl.at("max_order").get<std::size_t>();
        m.scoring.bleu.weights = bl.at("weights").get<std::vector<double>>();
        m.scoring.bleu.epsilon = bl.at("epsilon").get<double>();
        m.scoring.rouge_beta = j.at("rouge_beta").get<double>();
        m.max_summary_tokens = j.at("max_summary_tokens").get<std::size_t>();
        m.corpus_sha256 = j.at("corpus_sha256").get<std::string>();
        m.entry_count = j.at("entry_count").get<std::size_t>();
        m.created_at = j.value("created_at", std::string());
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed manifest: ") + e.what());
    }
}

namespace {

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void write_run(const std::filesystem::path& dir, std::span<const SampleScore> scores,
               const AggregateReport& aggregate, const RunManifest& manifest) {
    std::filesystem::create_directories(dir);
    write_file(dir / "scores.jsonl", scores_to_jsonl(scores));
    write_file(dir / "aggregate.json", emit_report(aggregate, ReportFormat::Json));
    write_file(dir / "aggregate.csv", emit_report(aggregate, ReportFormat::Csv));
    write_file(dir / "manifest.json", manifest_to_json(manifest));
}

RunDirectory read_run(const std::filesystem::path& dir) {
    RunDirectory run;
    run.manifest = manifest_from_json(read_file(dir / "manifest.json"));
    if (run.manifest.status != "complete")
        throw ValidationError("run " + dir.string() + " is marked " + run.manifest.status);
    run.scores = scores_from_jsonl(read_file(dir / "scores.jsonl"));
    return run;
}

void write_comparison(const std::filesystem::path& dir, const ComparisonReport& report, bool charts) {
    std::filesystem::create_directories(dir);
    write_file(dir / "comparison.json", emit_report(report, ReportFormat::Json));
    write_file(dir / "comparison.csv", emit_report(report, ReportFormat::Csv));
    if (!charts) return;
    for (Metric m : kAllMetrics)
        write_file(dir / ("chart_" + std::string(metric_key(m)) + ".svg"), emit_chart_svg(report, m));
}

}  // namespace medsum
