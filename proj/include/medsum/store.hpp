#pragma once

// Persistence of generated summaries: one `summaries` table with
// (id UUID, input TEXT, summarized TEXT, created_time TIMESTAMP).

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

struct sqlite3;

namespace medsum {

using Timestamp = std::chrono::sys_time<std::chrono::microseconds>;

/// Random (version 4) UUID in canonical lowercase form.
std::string generate_uuid_v4();
/// Canonical lowercase form of a well-formed UUID, nullopt otherwise.
std::optional<std::string> normalize_uuid(std::string_view text);

/// "2026-01-31T09:15:02.000123Z"
std::string format_timestamp(Timestamp t);

struct SummaryRecord {
    std::string id;
    std::string input;
    std::string summarized;
    Timestamp created_time{};

    bool operator==(const SummaryRecord&) const = default;
};

class SummaryStore {
public:
    virtual ~SummaryStore() = default;

    /// Durable before returning. Throws ValidationError on empty text, StorageError otherwise.
    virtual SummaryRecord insert_summary(std::string_view input, std::string_view summarized) = 0;
    /// Newest first (created_time desc, then id). Requires limit >= 1.
    virtual std::vector<SummaryRecord> list_summaries(std::size_t limit, std::size_t offset) = 0;
    /// Throws ValidationError for a malformed id.
    virtual std::optional<SummaryRecord> get_summary(std::string_view id) = 0;
    virtual std::size_t count() = 0;
    /// Cheap liveness probe.
    virtual bool ping() = 0;
};

/// DDL of the summaries table (same text as schema.sql).
std::string_view summaries_ddl();

/// Embedded SQLite-backed store. Accepts a plain path, "sqlite://<path>",
/// "sqlite:///<abs path>" or ":memory:".
class SqliteStore final : public SummaryStore {
public:
    explicit SqliteStore(const std::string& url);
    ~SqliteStore() override;
    SqliteStore(const SqliteStore&) = delete;
    SqliteStore& operator=(const SqliteStore&) = delete;

    SummaryRecord insert_summary(std::string_view input, std::string_view summarized) override;
    std::vector<SummaryRecord> list_summaries(std::size_t limit, std::size_t offset) override;
    std::optional<SummaryRecord> get_summary(std::string_view id) override;
    std::size_t count() override;
    bool ping() override;

private:
    std::mutex mutex_;
    sqlite3* db_ = nullptr;
    Timestamp last_time_{};
};

/// Resolves MEDSUM_DB_URL-style strings; empty means "./medsum.db".
std::unique_ptr<SummaryStore> open_store(const std::string& url);

}  // namespace medsum
