#include "medsum/store.hpp"

#include <array>
#include <cctype>
#include <cstdio>
#include <random>

#include <sqlite3.h>

#include "medsum/corpus.hpp"
#include "medsum/errors.hpp"

namespace medsum {

std::string generate_uuid_v4() {
    thread_local std::mt19937_64 rng = [] {
        std::random_device rd;
        std::seed_seq seq{rd(), rd(), rd(), rd(), rd(), rd(), rd(), rd()};
        return std::mt19937_64(seq);
    }();
    std::array<unsigned char, 16> bytes{};
    const std::uint64_t hi = rng(), lo = rng();
    for (int i = 0; i < 8; ++i) {
        bytes[static_cast<std::size_t>(i)] = static_cast<unsigned char>(hi >> (56 - 8 * i));
        bytes[static_cast<std::size_t>(i + 8)] = static_cast<unsigned char>(lo >> (56 - 8 * i));
    }
    bytes[6] = static_cast<unsigned char>((bytes[6] & 0x0F) | 0x40);  // version 4
    bytes[8] = static_cast<unsigned char>((bytes[8] & 0x3F) | 0x80);  // RFC 4122 variant

    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(36);
    for (std::size_t i = 0; i < 16; ++i) {
        if (i == 4 || i == 6 || i == 8 || i == 10) out += '-';
        out += kHex[bytes[i] >> 4];
        out += kHex[bytes[i] & 0xF];
    }
    return out;
}

std::optional<std::string> normalize_uuid(std::string_view text) {
    if (text.size() != 36) return std::nullopt;
    std::string out(text);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const bool dash_slot = i == 8 || i == 13 || i == 18 || i == 23;
        if (dash_slot) {
            if (out[i] != '-') return std::nullopt;
        } else {
            if (!std::isxdigit(static_cast<unsigned char>(out[i]))) return std::nullopt;
            out[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[i])));
        }
    }
    return out;
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%06lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()), static_cast<long long>(hms.subseconds().count()));
    return buf;
}

std::string_view summaries_ddl() {
    return "CREATE TABLE IF NOT EXISTS summaries (\n"
           "    id TEXT PRIMARY KEY,\n"
           "    input TEXT NOT NULL,\n"
           "    summarized TEXT NOT NULL,\n"
           "    created_time TIMESTAMP NOT NULL\n"
           ");\n"
           "CREATE INDEX IF NOT EXISTS summaries_created_time ON summaries (created_time DESC, id);\n";
}

namespace {

class Statement {
public:
    Statement(sqlite3* db, std::string_view sql) : db_(db) {
        if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, nullptr) != SQLITE_OK)
            throw StorageError(std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
    ~Statement() { sqlite3_finalize(stmt_); }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;

    void bind(int index, std::string_view text) {
        check(sqlite3_bind_text(stmt_, index, text.data(), static_cast<int>(text.size()), SQLITE_TRANSIENT));
    }
    void bind(int index, std::int64_t value) { check(sqlite3_bind_int64(stmt_, index, value)); }

    /// True while a row is available.
    bool step() {
        const int rc = sqlite3_step(stmt_);
        if (rc == SQLITE_ROW) return true;
        if (rc == SQLITE_DONE) return false;
        throw StorageError(std::string("statement failed: ") + sqlite3_errmsg(db_));
    }

    std::string text(int col) const {
        const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
        return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string();
    }
    std::int64_t int64(int col) const { return sqlite3_column_int64(stmt_, col); }

    SummaryRecord record() const {
        return {text(0), text(1), text(2), Timestamp(std::chrono::microseconds(int64(3)))};
    }

private:
    void check(int rc) {
        if (rc != SQLITE_OK) throw StorageError(std::string("bind failed: ") + sqlite3_errmsg(db_));
    }

    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
};

void exec(sqlite3* db, const std::string& sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
        std::string msg = err ? err : "unknown error";
        sqlite3_free(err);
        throw StorageError("sqlite: " + msg);
    }
}

std::string path_from_url(const std::string& url) {
    if (url.empty()) return "./medsum.db";
    for (std::string_view prefix : {"sqlite://", "file://"})
        if (url.rfind(prefix, 0) == 0) return url.substr(prefix.size());
    if (url.find("://") != std::string::npos)
        throw ValidationError("unsupported store URL '" + url + "' (expected a path, sqlite:// or file://)");
    return url;
}

constexpr const char* kColumns = "SELECT id, input, summarized, created_time FROM summaries";

}  // namespace

SqliteStore::SqliteStore(const std::string& url) {
    const std::string path = path_from_url(url);
    const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX;
    if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
        std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
        sqlite3_close(db_);
        db_ = nullptr;
        throw StorageError("cannot open summary store '" + path + "': " + msg);
    }
    try {
        sqlite3_busy_timeout(db_, 5000);
        if (path != ":memory:") exec(db_, "PRAGMA journal_mode=WAL;");
        exec(db_, "PRAGMA synchronous=FULL;");
        exec(db_, std::string(summaries_ddl()));
        Statement latest(db_, "SELECT COALESCE(MAX(created_time), 0) FROM summaries");
        if (latest.step()) last_time_ = Timestamp(std::chrono::microseconds(latest.int64(0)));
    } catch (...) {
        sqlite3_close(db_);
        db_ = nullptr;
        throw;
    }
}

SqliteStore::~SqliteStore() { sqlite3_close(db_); }

SummaryRecord SqliteStore::insert_summary(std::string_view input, std::string_view summarized) {
    if (trim(input).empty() || trim(summarized).empty())
        throw ValidationError("summary record requires non-empty input and summary");

    std::lock_guard lock(mutex_);
    auto now = std::chrono::floor<std::chrono::microseconds>(std::chrono::system_clock::now());
    if (now < last_time_) now = last_time_;  // wall clock stepped back

    SummaryRecord rec{generate_uuid_v4(), std::string(input), std::string(summarized), now};
    Statement insert(db_, "INSERT INTO summaries (id, input, summarized, created_time) VALUES (?1, ?2, ?3, ?4)");
    insert.bind(1, rec.id);
    insert.bind(2, rec.input);
    insert.bind(3, rec.summarized);
    insert.bind(4, static_cast<std::int64_t>(rec.created_time.time_since_epoch().count()));
    insert.step();
    last_time_ = now;
    return rec;
}

std::vector<SummaryRecord> SqliteStore::list_summaries(std::size_t limit, std::size_t offset) {
    if (limit == 0) throw ValidationError("limit must be >= 1");
    std::lock_guard lock(mutex_);
    Statement q(db_, std::string(kColumns) + " ORDER BY created_time DESC, id ASC LIMIT ?1 OFFSET ?2");
    q.bind(1, static_cast<std::int64_t>(limit));
    q.bind(2, static_cast<std::int64_t>(offset));
    std::vector<SummaryRecord> out;
    while (q.step()) out.push_back(q.record());
    return out;
}

std::optional<SummaryRecord> SqliteStore::get_summary(std::string_view id) {
    auto canonical = normalize_uuid(id);
    if (!canonical) throw ValidationError("malformed summary id '" + std::string(id) + "'");
    std::lock_guard lock(mutex_);
    Statement q(db_, std::string(kColumns) + " WHERE id = ?1");
    q.bind(1, *canonical);
    if (!q.step()) return std::nullopt;
    return q.record();
}

std::size_t SqliteStore::count() {
    std::lock_guard lock(mutex_);
    Statement q(db_, "SELECT COUNT(*) FROM summaries");
    q.step();
    return static_cast<std::size_t>(q.int64(0));
}

bool SqliteStore::ping() {
    try {
        std::lock_guard lock(mutex_);
        Statement q(db_, "SELECT 1 FROM summaries LIMIT 1");
        q.step();
        return true;
    } catch (const StorageError&) {
        return false;
    }
}

std::unique_ptr<SummaryStore> open_store(const std::string& url) { return std::make_unique<SqliteStore>(url); }

}  // namespace medsum
