#pragma once

// `medsum` command line: ingest | eval | compare | serve.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "medsum/backends.hpp"
#include "medsum/corpus.hpp"
#include "medsum/service.hpp"

namespace medsum::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct IngestCommand {
    std::filesystem::path input;
    std::filesystem::path out;
    bool strict = false;
};

struct EvalCommand {
    std::filesystem::path corpus;
    TaskKind task = TaskKind::Passage;
    std::string backend = "extractive";  // extractive | remote[:model]
    std::string provider = "det";        // det[:seed[:dim]] | remote[:native]
    std::filesystem::path out;
    std::size_t workers = 1;
    std::size_t max_summary_tokens = 128;
    std::optional<std::filesystem::path> config;
};

struct CompareCommand {
    std::filesystem::path a;
    std::filesystem::path b;
    std::filesystem::path out;
    bool charts = false;
};

struct ServeCommand {
    std::optional<std::filesystem::path> config;
    std::optional<std::string> addr;
    std::optional<std::string> backend;  // extractive | remote | none
};

using Command = std::variant<IngestCommand, EvalCommand, CompareCommand, ServeCommand>;

struct ParseResult {
    std::optional<Command> command;  // empty when help was printed or parsing failed
    int exit_code = kExitOk;
    std::string output;  // help text or usage error to print
};

/// argv[0] is the program name.
ParseResult parse_args(const std::vector<std::string>& argv);

/// Key-value settings: config file < MEDSUM_* environment < command-line flags.
struct Settings {
    std::string backend = "extractive";
    std::string backend_url;
    std::string backend_key;
    std::string backend_model = "medsum";
    long backend_timeout_ms = 30000;
    int backend_retries = 2;
    std::size_t context_budget_tokens = 512;
    std::string template_dir = "templates";
    std::string embed_url;
    std::string embed_key;
    std::string db_url = "./medsum.db";
    std::string addr = "127.0.0.1:8080";
    std::string cors_origin = "*";
    std::size_t max_body_bytes = 1 << 20;
    std::size_t workers = 8;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// File format: one `key = value` per line (values may be double-quoted), `#`
/// comments. Keys are the environment names without the MEDSUM_ prefix, in
/// lower case (backend_url <-> MEDSUM_BACKEND_URL).
Settings load_settings(const std::optional<std::filesystem::path>& file, const EnvLookup& env);
EnvLookup process_env();

BackendConfig backend_config(const Settings& settings, const std::string& spec);

/// Runs a parsed command. Diagnostics are single lines on `err`.
int execute(const Command& command, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

}  // namespace medsum::cli
