#include "medsum/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "medsum/errors.hpp"

namespace medsum {

namespace {

using nlohmann::json;

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) ==
                      std::tolower(static_cast<unsigned char>(y));
           });
}

// Field lookup by case-insensitive name; numbers are accepted for the id.
std::optional<std::string> field(const json& record, std::string_view name, bool allow_number) {
    for (const auto& [key, value] : record.items()) {
        if (!iequals(key, name)) continue;
        if (value.is_string()) return std::string(trim(value.get_ref<const std::string&>()));
        if (allow_number && value.is_number_integer()) return value.dump();
        return std::nullopt;
    }
    return std::nullopt;
}

struct RawRecord {
    json value;
};

std::vector<RawRecord> split_records(std::string_view raw) {
    std::vector<RawRecord> records;
    std::size_t first = 0;
    while (first < raw.size() && is_space(raw[first])) ++first;
    if (first == raw.size()) return records;

    if (raw[first] == '[') {
        json doc;
        try {
            doc = json::parse(raw.begin(), raw.end());
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte == 0 ? 0 : e.byte - 1);
        }
        for (auto& item : doc) records.push_back({std::move(item)});
        return records;
    }

    // JSON-lines: every non-blank line holds one record.
    std::size_t line_start = 0;
    while (line_start <= raw.size()) {
        std::size_t line_end = raw.find('\n', line_start);
        if (line_end == std::string_view::npos) line_end = raw.size();
        std::string_view line = raw.substr(line_start, line_end - line_start);
        if (!trim(line).empty()) {
            try {
                records.push_back({json::parse(line.begin(), line.end())});
            } catch (const json::parse_error& e) {
                std::size_t local = e.byte == 0 ? 0 : e.byte - 1;
                throw ParseError(std::string("malformed JSON line: ") + e.what(), line_start + local);
            }
        }
        if (line_end == raw.size()) break;
        line_start = line_end + 1;
    }
    return records;
}

}  // namespace

std::string_view to_string(TaskKind task) {
    switch (task) {
        case TaskKind::Passage: return "passage";
        case TaskKind::Conversation: return "conversation";
        case TaskKind::Question: return "question";
    }
    return "passage";
}

std::optional<TaskKind> parse_task(std::string_view name) {
    for (TaskKind t : kAllTasks)
        if (to_string(t) == name) return t;
    return std::nullopt;
}

std::string_view to_string(LengthBucket bucket) {
    switch (bucket) {
        case LengthBucket::Short: return "short";
        case LengthBucket::Medium: return "medium";
        case LengthBucket::Long: return "long";
    }
    return "short";
}

std::optional<LengthBucket> parse_bucket(std::string_view name) {
    for (LengthBucket b : kAllBuckets)
        if (to_string(b) == name) return b;
    return std::nullopt;
}

BucketConfig BucketConfig::defaults(TaskKind task) {
    switch (task) {
        case TaskKind::Passage: return {task, 39, 92};        // 20-24 | 55-75 | 110-141
        case TaskKind::Question: return {task, 32, 93};       // 9-19 | 47-53 | 134-179
        case TaskKind::Conversation: return {task, 1001, 2182};  // 628-818 | 1186-1373 | 2992-3050
    }
    return {};
}

void BucketConfig::validate() const {
    if (short_max == 0 || short_max >= medium_max)
        throw ValidationError("bucket config requires 0 < short_max < medium_max");
}

std::string_view trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    return text.substr(b, e - b);
}

DatasetParse parse_dataset(std::string_view raw, Strictness strictness) {
    DatasetParse out;
    std::unordered_set<std::string> seen;
    auto records = split_records(raw);

    for (std::size_t i = 0; i < records.size(); ++i) {
        const json& rec = records[i].value;
        std::string problem;
        std::optional<std::string> id, inputs, target;
        if (!rec.is_object()) {
            problem = "record is not an object";
        } else {
            id = field(rec, "id", true);
            inputs = field(rec, "inputs", false);
            target = field(rec, "target", false);
            if (!id) problem = "missing or non-string field 'id'";
            else if (!inputs) problem = "missing or non-string field 'inputs'";
            else if (!target) problem = "missing or non-string field 'target'";
            else if (id->empty()) problem = "empty id";
            else if (inputs->empty()) problem = "empty inputs";
            else if (seen.count(*id)) problem = "duplicate id '" + *id + "'";
        }
        if (!problem.empty()) {
            std::string msg = "record " + std::to_string(i) + ": " + problem;
            if (strictness == Strictness::Strict) throw RecordError(msg, i);
            out.skipped.push_back({i, msg});
            continue;
        }
        seen.insert(*id);
        out.entries.push_back({std::move(*id), std::move(*inputs), std::move(*target)});
    }
    return out;
}

std::string serialize_jsonl(const std::vector<DatasetEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        nlohmann::ordered_json j;
        j["id"] = e.id;
        j["inputs"] = e.inputs;
        j["target"] = e.target;
        out += j.dump();
        out += '\n';
    }
    return out;
}

namespace {

bool has_speaker_marker(std::string_view line) {
    static constexpr std::array<std::string_view, 4> kMarkers = {"doctor:", "patient:", "d:", "p:"};
    line = trim(line);
    for (auto m : kMarkers)
        if (line.size() >= m.size() && iequals(line.substr(0, m.size()), m)) return true;
    return false;
}

bool is_question_text(std::string_view target) {
    static constexpr std::array<std::string_view, 8> kInterrogatives = {
        "what", "why", "how", "when", "is", "can", "does", "should"};
    target = trim(target);
    if (target.empty()) return false;
    if (target.back() == '?') return true;
    std::size_t end = 0;
    while (end < target.size() && std::isalpha(static_cast<unsigned char>(target[end]))) ++end;
    std::string first = lower(target.substr(0, end));
    return std::find(kInterrogatives.begin(), kInterrogatives.end(), first) != kInterrogatives.end();
}

}  // namespace

TaskKind classify_task(const DatasetEntry& entry) {
    int turns = 0;
    std::string_view rest = entry.inputs;
    while (!rest.empty()) {
        std::size_t nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        if (has_speaker_marker(line)) ++turns;
        if (nl == std::string_view::npos) break;
        rest.remove_prefix(nl + 1);
    }
    if (turns >= 2) return TaskKind::Conversation;
    if (is_question_text(entry.target)) return TaskKind::Question;
    return TaskKind::Passage;
}

std::size_t word_count(std::string_view text) {
    std::size_t count = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

LengthBucket assign_bucket(std::size_t count, const BucketConfig& config) {
    if (count <= config.short_max) return LengthBucket::Short;
    if (count <= config.medium_max) return LengthBucket::Medium;
    return LengthBucket::Long;
}

}  // namespace medsum
