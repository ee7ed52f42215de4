#include "medsum/backends.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "http_client.hpp"
#include "medsum/errors.hpp"
#include "medsum/metrics.hpp"

namespace medsum {

void SummarizeRequest::validate() const {
    if (trim(text).empty()) throw ValidationError("summarize request text is empty");
    if (max_summary_tokens < 8) throw ValidationError("max_summary_tokens must be >= 8");
}

// ---------------------------------------------------------------------------
// Prompt templates

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size()))
        ++n;
    return n;
}

}  // namespace

PromptTemplate::PromptTemplate(TaskKind task, std::string body) : task_(task), body_(std::move(body)) {
    if (count_occurrences(body_, kPlaceholder) != 1)
        throw ValidationError("prompt template for " + std::string(to_string(task)) +
                              " must contain exactly one {text} placeholder");
}

PromptTemplate PromptTemplate::default_for(TaskKind task) {
    switch (task) {
        case TaskKind::Passage:
            return {task,
                    "Summarize the key findings of the following medical report in one or two "
                    "sentences, keeping the medical terminology.\n\n{text}"};
        case TaskKind::Conversation:
            return {task,
                    "Read the following doctor-patient conversation and state the patient's health "
                    "issues in a short summary. Leave out greetings and small talk.\n\n{text}"};
        case TaskKind::Question:
            return {task,
                    "Identify the main medical question asked in the following text and restate it "
                    "as a single concise question.\n\n{text}"};
    }
    return {task, "{text}"};
}

PromptTemplate PromptTemplate::load(TaskKind task, const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ValidationError("cannot read prompt template " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string body = ss.str();
    if (!body.empty() && body.back() == '\n') body.pop_back();
    return {task, std::move(body)};
}

std::string PromptTemplate::render(std::string_view text) const {
    const std::size_t pos = body_.find(kPlaceholder);
    std::string out;
    out.reserve(body_.size() + text.size());
    out.append(body_, 0, pos);
    out.append(text);
    out.append(body_, pos + kPlaceholder.size());
    return out;
}

std::map<TaskKind, PromptTemplate> load_templates(const std::filesystem::path& dir) {
    std::map<TaskKind, PromptTemplate> out;
    for (TaskKind t : kAllTasks) {
        auto file = dir / (std::string(to_string(t)) + ".txt");
        if (!dir.empty() && std::filesystem::exists(file))
            out.emplace(t, PromptTemplate::load(t, file));
        else
            out.emplace(t, PromptTemplate::default_for(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Budgeting and sentence splitting

std::size_t estimate_tokens(std::size_t words) { return (words * 13 + 9) / 10; }

Truncation truncate_to_budget(std::string_view text, std::size_t budget) {
    if (budget == 0) throw ValidationError("token budget must be >= 1");
    const std::size_t words = word_count(text);
    if (estimate_tokens(words) <= budget) return {std::string(text), false};

    std::size_t keep = (budget * 10) / 13;
    while (keep > 0 && estimate_tokens(keep) > budget) --keep;
    keep = std::max<std::size_t>(keep, 1);

    // Cut right after the keep-th word; leading whitespace stays as it was.
    std::size_t seen = 0, i = 0;
    bool in_word = false;
    for (; i < text.size(); ++i) {
        const bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
        if (!space && !in_word) {
            in_word = true;
        } else if (space && in_word) {
            in_word = false;
            if (++seen == keep) break;
        }
    }
    return {std::string(text.substr(0, i)), true};
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
        auto piece = trim(text.substr(start, end - start));
        if (!piece.empty()) out.emplace_back(piece);
        start = end;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        if (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))
            flush(i + 1);
    }
    flush(text.size());
    return out;
}

// ---------------------------------------------------------------------------
// Extractive baseline

namespace {

constexpr std::array<std::string_view, 8> kInterrogatives = {"what", "why",  "how",  "when",
                                                             "is",   "can",  "does", "should"};

struct Sentence {
    std::string text;
    bool patient = false;
};

enum class Speaker { None, Patient, Doctor };

Speaker strip_marker(std::string_view& line) {
    static constexpr std::array<std::pair<std::string_view, Speaker>, 4> kMarkers = {{
        {"patient:", Speaker::Patient},
        {"doctor:", Speaker::Doctor},
        {"p:", Speaker::Patient},
        {"d:", Speaker::Doctor},
    }};
    std::string_view t = trim(line);
    for (const auto& [marker, who] : kMarkers) {
        if (t.size() < marker.size()) continue;
        bool match = true;
        for (std::size_t i = 0; i < marker.size() && match; ++i)
            match = std::tolower(static_cast<unsigned char>(t[i])) == marker[i];
        if (match) {
            line = t.substr(marker.size());
            return who;
        }
    }
    return Speaker::None;
}

std::vector<Sentence> conversation_sentences(std::string_view text) {
    std::vector<Sentence> out;
    Speaker current = Speaker::None;
    bool any_patient = false;
    while (true) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        Speaker who = strip_marker(line);
        if (who != Speaker::None) current = who;
        for (auto& s : split_sentences(line)) out.push_back({std::move(s), current == Speaker::Patient});
        any_patient = any_patient || current == Speaker::Patient;
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }
    if (!any_patient)
        for (auto& s : out) s.patient = true;
    return out;
}

std::vector<Sentence> sentences_for(TaskKind task, std::string_view text) {
    if (task == TaskKind::Conversation) return conversation_sentences(text);
    std::vector<Sentence> out;
    for (auto& s : split_sentences(text)) out.push_back({std::move(s), true});
    return out;
}

std::vector<TokenSequence> content_tokens(const std::vector<Sentence>& sentences) {
    std::vector<TokenSequence> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) {
        TokenSequence toks = tokenize(s.text);
        std::erase_if(toks, [](const std::string& t) { return is_punctuation_token(t); });
        out.push_back(std::move(toks));
    }
    return out;
}

// Indices of the `limit` best eligible sentences by summed document term frequency.
std::vector<std::size_t> top_by_term_frequency(const std::vector<Sentence>& sentences, std::size_t limit) {
    const auto tokens = content_tokens(sentences);
    std::unordered_map<std::string, std::size_t> tf;
    for (const auto& seq : tokens)
        for (const auto& t : seq) ++tf[t];

    std::vector<std::pair<std::size_t, std::size_t>> scored;  // (score, index)
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (!sentences[i].patient) continue;
        std::size_t score = 0;
        for (const auto& t : tokens[i]) score += tf[t];
        scored.emplace_back(score, i);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    if (scored.size() > limit) scored.resize(limit);

    std::vector<std::size_t> picked;
    for (const auto& [score, index] : scored) picked.push_back(index);
    std::sort(picked.begin(), picked.end());
    return picked;
}

std::size_t pick_question(const std::vector<Sentence>& sentences) {
    for (std::size_t i = sentences.size(); i-- > 0;)
        if (sentences[i].text.back() == '?') return i;

    const auto tokens = content_tokens(sentences);
    std::size_t best = 0, best_count = 0;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        std::size_t count = 0;
        for (const auto& t : tokens[i])
            if (std::find(kInterrogatives.begin(), kInterrogatives.end(), t) != kInterrogatives.end()) ++count;
        if (count > best_count) {
            best = i;
            best_count = count;
        }
    }
    return best;
}

std::string join(const std::vector<Sentence>& sentences, const std::vector<std::size_t>& picked) {
    std::string out;
    for (std::size_t i : picked) {
        if (!out.empty()) out += ' ';
        out += sentences[i].text;
    }
    return out;
}

}  // namespace

std::vector<std::string> candidate_sentences(TaskKind task, std::string_view text) {
    std::vector<std::string> out;
    for (auto& s : sentences_for(task, text)) out.push_back(std::move(s.text));
    return out;
}

SummaryOutput ExtractiveSummarizer::summarize(const SummarizeRequest& request) const {
    const auto started = std::chrono::steady_clock::now();
    request.validate();

    auto sentences = sentences_for(request.task, request.text);
    std::vector<std::size_t> picked;
    if (!sentences.empty()) {
        switch (request.task) {
            case TaskKind::Passage: picked = top_by_term_frequency(sentences, 3); break;
            case TaskKind::Conversation: picked = top_by_term_frequency(sentences, 5); break;
            case TaskKind::Question: picked = {pick_question(sentences)}; break;
        }
    }

    SummaryOutput out;
    // Only speaker markers and no content: nothing to rank, echo the input.
    out.summary = picked.empty() ? std::string(trim(request.text)) : join(sentences, picked);
    out.backend_id = id();
    out.task = request.task;
    out.latency = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
    return out;
}

// ---------------------------------------------------------------------------
// Remote completion backend

void BackendConfig::validate() const {
    if (timeout.count() <= 0) throw ValidationError("backend timeout must be > 0");
    if (retries < 0) throw ValidationError("backend retries must be >= 0");
    if (context_budget_tokens < 64) throw ValidationError("context_budget_tokens must be >= 64");
    if (max_in_flight == 0 || max_in_flight > 64) throw ValidationError("backend max_in_flight must be in [1, 64]");
    if (kind == Kind::Remote && endpoint.empty()) throw ValidationError("remote backend requires an endpoint URL");
}

RemoteSummarizer::RemoteSummarizer(BackendConfig config, std::map<TaskKind, PromptTemplate> templates)
    : config_((config.validate(), std::move(config))),
      templates_(std::move(templates)),
      in_flight_(static_cast<std::ptrdiff_t>(config_.max_in_flight)) {
    for (TaskKind t : kAllTasks)
        if (!templates_.count(t)) templates_.emplace(t, PromptTemplate::default_for(t));
}

const PromptTemplate& RemoteSummarizer::template_for(TaskKind task) const { return templates_.at(task); }

bool RemoteSummarizer::healthy() const {
    std::string error;
    auto ep = detail::Endpoint::parse(config_.endpoint);
    auto res = detail::get(ep, "/health", std::min(config_.timeout, std::chrono::milliseconds(2000)), error);
    return res && res->status == 200;
}

SummaryOutput RemoteSummarizer::summarize(const SummarizeRequest& request) const {
    const auto started = std::chrono::steady_clock::now();
    request.validate();

    const PromptTemplate& tmpl = template_for(request.task);
    // The instruction itself eats into the context window.
    const std::size_t overhead = estimate_tokens(word_count(tmpl.render("")));
    const std::size_t budget =
        config_.context_budget_tokens > overhead ? config_.context_budget_tokens - overhead : 1;
    Truncation input = truncate_to_budget(request.text, budget);

    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["prompt"] = tmpl.render(input.text);
    body["max_tokens"] = request.max_summary_tokens;
    const std::string payload = body.dump();
    const auto ep = detail::Endpoint::parse(config_.endpoint);
    const std::string url = ep.url_for("/v1/completions");

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));

        std::optional<detail::HttpResult> res;
        {
            in_flight_.acquire();
            struct Release {
                std::counting_semaphore<64>& s;
                ~Release() { s.release(); }
            } release{in_flight_};
            res = detail::post_json(ep, "/v1/completions", payload, config_.auth_token, config_.timeout,
                                    last_error);
        }
        if (!res) continue;
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200)
            throw BackendUnavailable(url + " rejected the request with HTTP " + std::to_string(res->status));

        std::string text;
        try {
            text = nlohmann::json::parse(res->body).at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw BackendUnavailable(url + " returned a malformed completion: " + e.what());
        }
        std::string_view summary = trim(text);
        if (summary.empty()) throw DegenerateOutput(url + " returned an empty completion");

        SummaryOutput out;
        out.summary = std::string(summary);
        out.backend_id = id();
        out.task = request.task;
        out.truncated_input = input.truncated;
        out.latency =
            std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - started);
        return out;
    }
    throw BackendUnavailable(url + " unavailable after " + std::to_string(config_.retries + 1) +
                             " attempts: " + last_error);
}

std::shared_ptr<Summarizer> make_summarizer(const BackendConfig& config, const std::filesystem::path& template_dir) {
    config.validate();
    if (config.kind == BackendConfig::Kind::Extractive) return std::make_shared<ExtractiveSummarizer>();
    return std::make_shared<RemoteSummarizer>(config, load_templates(template_dir));
}

}  // namespace medsum
