#pragma once

// Dataset ingestion: JSON / JSON-lines records of {id, inputs, target},
// task classification and input-length bucketing.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace medsum {

enum class TaskKind { Passage, Conversation, Question };

enum class LengthBucket { Short = 0, Medium = 1, Long = 2 };

inline constexpr TaskKind kAllTasks[] = {TaskKind::Passage, TaskKind::Conversation,
                                         TaskKind::Question};
inline constexpr LengthBucket kAllBuckets[] = {LengthBucket::Short, LengthBucket::Medium,
                                               LengthBucket::Long};

/// Lowercase names: "passage", "conversation", "question".
std::string_view to_string(TaskKind task);
std::optional<TaskKind> parse_task(std::string_view name);

/// Lowercase names: "short", "medium", "long".
std::string_view to_string(LengthBucket bucket);
std::optional<LengthBucket> parse_bucket(std::string_view name);

struct DatasetEntry {
    std::string id;
    std::string inputs;
    std::string target;

    bool operator==(const DatasetEntry&) const = default;
};

struct BucketConfig {
    TaskKind task = TaskKind::Passage;
    std::size_t short_max = 39;
    std::size_t medium_max = 92;

    /// Thresholds sit in the middle of the gaps between the observed
    /// short/medium/long word ranges of each task's evaluation set.
    static BucketConfig defaults(TaskKind task);

    /// Throws ValidationError unless 0 < short_max < medium_max.
    void validate() const;

    bool operator==(const BucketConfig&) const = default;
};

struct RecordIssue {
    std::size_t index;
    std::string message;
};

struct DatasetParse {
    std::vector<DatasetEntry> entries;
    std::vector<RecordIssue> skipped;
};

enum class Strictness { Lenient, Strict };

/// Parses a JSON array of records, or newline-delimited JSON records.
/// Field names match case-insensitively; values are whitespace-trimmed.
///
/// Malformed JSON throws ParseError with the byte offset. A record that is
/// not an object, lacks a field, has empty inputs or repeats an id throws
/// RecordError in Strict mode and is listed in `skipped` otherwise.
DatasetParse parse_dataset(std::string_view raw, Strictness strictness = Strictness::Lenient);

/// One compact JSON object per line, fields in id/inputs/target order.
std::string serialize_jsonl(const std::vector<DatasetEntry>& entries);

/// Rule-based split of the dataset into the three task corpora:
///   - two or more lines opening with a speaker marker (Doctor:/Patient:/D:/P:)
///     in the inputs make a Conversation;
///   - a target ending in '?' or opening with an interrogative word makes a Question;
///   - everything else is a Passage.
TaskKind classify_task(const DatasetEntry& entry);

/// Number of maximal non-whitespace runs.
std::size_t word_count(std::string_view text);

LengthBucket assign_bucket(std::size_t count, const BucketConfig& config);

std::string_view trim(std::string_view text);

}  // namespace medsum
