#include "medsum/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "medsum/embeddings.hpp"
#include "medsum/errors.hpp"
#include "medsum/evalharness.hpp"
#include "medsum/store.hpp"

namespace medsum::cli {

namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void on_interrupt(int) { g_interrupted.store(true); }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string utc_now() {
    return format_timestamp(std::chrono::floor<std::chrono::microseconds>(std::chrono::system_clock::now()));
}

}  // namespace

ParseResult parse_args(const std::vector<std::string>& argv) {
    CLI::App app{"Medical text summarization service and evaluation toolkit", "medsum"};
    app.require_subcommand(1, 1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    IngestCommand ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Split a JSON dataset into <task>.jsonl corpora");
    ingest_cmd->add_option("--input", ingest.input, "Dataset file (JSON array or JSON-lines)")
        ->required()
        ->check(CLI::ExistingFile);
    ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();
    ingest_cmd->add_flag("--strict", ingest.strict, "Abort on the first malformed record");

    EvalCommand eval;
    std::string task_name;
    std::string config_path;
    auto* eval_cmd = app.add_subcommand("eval", "Score a backend on a task corpus");
    eval_cmd->add_option("--corpus", eval.corpus, "Task corpus (.jsonl)")->required()->check(CLI::ExistingFile);
    eval_cmd->add_option("--task", task_name, "passage | conversation | question")
        ->required()
        ->check(CLI::IsMember({"passage", "conversation", "question"}));
    eval_cmd->add_option("--backend", eval.backend, "extractive | remote[:model]")->capture_default_str();
    eval_cmd->add_option("--provider", eval.provider, "det[:seed[:dim]] | remote[:native]")->capture_default_str();
    eval_cmd->add_option("--out", eval.out, "Run directory")->required();
    eval_cmd->add_option("--workers", eval.workers, "Concurrent samples")->check(CLI::Range(1, 256))->capture_default_str();
    eval_cmd->add_option("--max-summary-tokens", eval.max_summary_tokens, "Completion budget")
        ->check(CLI::Range(8, 100000))
        ->capture_default_str();
    eval_cmd->add_option("--config", config_path, "Settings file")->check(CLI::ExistingFile);

    CompareCommand cmp;
    auto* cmp_cmd = app.add_subcommand("compare", "Compare two run directories");
    cmp_cmd->add_option("--a", cmp.a, "Run directory of backend A")->required()->check(CLI::ExistingDirectory);
    cmp_cmd->add_option("--b", cmp.b, "Run directory of backend B")->required()->check(CLI::ExistingDirectory);
    cmp_cmd->add_option("--out", cmp.out, "Output directory")->required();
    cmp_cmd->add_flag("--charts", cmp.charts, "Also write one SVG chart per metric");

    ServeCommand serve;
    std::string serve_config, serve_addr, serve_backend;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("--config", serve_config, "Settings file")->check(CLI::ExistingFile);
    serve_cmd->add_option("--addr", serve_addr, "host:port (overrides MEDSUM_ADDR)");
    serve_cmd->add_option("--backend", serve_backend, "extractive | remote | none")
        ->check(CLI::IsMember({"extractive", "remote", "none"}));

    ParseResult result;
    std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
    std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        std::ostringstream out, err;
        const int code = app.exit(e, out, err);
        result.exit_code = code == 0 ? kExitOk : kExitUsage;
        result.output = out.str() + err.str();
        return result;
    }

    if (ingest_cmd->parsed()) {
        result.command = ingest;
    } else if (eval_cmd->parsed()) {
        eval.task = *parse_task(task_name);
        if (!config_path.empty()) eval.config = config_path;
        result.command = eval;
    } else if (cmp_cmd->parsed()) {
        result.command = cmp;
    } else {
        if (!serve_config.empty()) serve.config = serve_config;
        if (!serve_addr.empty()) serve.addr = serve_addr;
        if (!serve_backend.empty()) serve.backend = serve_backend;
        result.command = serve;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Settings

namespace {

std::map<std::string, std::string> parse_settings_file(const std::filesystem::path& file) {
    std::map<std::string, std::string> out;
    std::istringstream in(read_file(file));
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        std::string_view t = trim(line);
        if (t.empty() || t.front() == '#' || t.front() == '[') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos)
            throw ValidationError(file.string() + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key(trim(t.substr(0, eq)));
        std::string value(trim(t.substr(eq + 1)));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        out[key] = value;
    }
    return out;
}

template <typename T>
void assign(T& target, const std::string& key, const std::string& value) {
    if constexpr (std::is_same_v<T, std::string>) {
        target = value;
    } else {
        try {
            std::size_t pos = 0;
            long long v = std::stoll(value, &pos);
            if (pos != value.size() || v < 0) throw std::invalid_argument(value);
            target = static_cast<T>(v);
        } catch (const std::exception&) {
            throw ValidationError("setting '" + key + "' expects a non-negative integer, got '" + value + "'");
        }
    }
}

}  // namespace

EnvLookup process_env() {
    return [](const std::string& name) -> std::optional<std::string> {
        const char* v = std::getenv(name.c_str());
        if (!v) return std::nullopt;
        return std::string(v);
    };
}

Settings load_settings(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
    Settings s;
    std::map<std::string, std::string> values;
    if (file) values = parse_settings_file(*file);

    auto bind = [&](const std::string& key, auto& target) {
        std::string env_name = "MEDSUM_";
        for (char c : key) env_name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        std::optional<std::string> v;
        if (auto it = values.find(key); it != values.end()) v = it->second;
        if (env)
            if (auto e = env(env_name)) v = e;
        if (v) assign(target, key, *v);
        values.erase(key);
    };
    bind("backend", s.backend);
    bind("backend_url", s.backend_url);
    bind("backend_key", s.backend_key);
    bind("backend_model", s.backend_model);
    bind("backend_timeout_ms", s.backend_timeout_ms);
    bind("backend_retries", s.backend_retries);
    bind("context_budget_tokens", s.context_budget_tokens);
    bind("template_dir", s.template_dir);
    bind("embed_url", s.embed_url);
    bind("embed_key", s.embed_key);
    bind("db_url", s.db_url);
    bind("addr", s.addr);
    bind("cors_origin", s.cors_origin);
    bind("max_body_bytes", s.max_body_bytes);
    bind("workers", s.workers);
    if (!values.empty()) throw ValidationError("unknown setting '" + values.begin()->first + "'");
    return s;
}

BackendConfig backend_config(const Settings& settings, const std::string& spec) {
    BackendConfig cfg;
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    if (kind == "extractive") {
        cfg.kind = BackendConfig::Kind::Extractive;
    } else if (kind == "remote") {
        cfg.kind = BackendConfig::Kind::Remote;
        cfg.endpoint = settings.backend_url;
        cfg.auth_token = settings.backend_key;
        cfg.model = colon == std::string::npos ? settings.backend_model : spec.substr(colon + 1);
        cfg.timeout = std::chrono::milliseconds(settings.backend_timeout_ms);
        cfg.retries = settings.backend_retries;
    } else {
        throw ValidationError("unknown backend '" + spec + "' (expected extractive or remote[:model])");
    }
    cfg.context_budget_tokens = settings.context_budget_tokens;
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

int run_ingest(const IngestCommand& cmd, std::ostream& out) {
    const auto parsed = parse_dataset(read_file(cmd.input), cmd.strict ? Strictness::Strict : Strictness::Lenient);
    std::map<TaskKind, std::vector<DatasetEntry>> split;
    for (TaskKind t : kAllTasks) split[t];
    for (const auto& e : parsed.entries) split[classify_task(e)].push_back(e);

    std::filesystem::create_directories(cmd.out);
    for (const auto& [task, entries] : split)
        write_file(cmd.out / (std::string(to_string(task)) + ".jsonl"), serialize_jsonl(entries));

    out << "ingested " << parsed.entries.size() << " records: passage=" << split[TaskKind::Passage].size()
        << " conversation=" << split[TaskKind::Conversation].size()
        << " question=" << split[TaskKind::Question].size() << " skipped=" << parsed.skipped.size() << "\n";
    return kExitOk;
}

int run_eval_command(const EvalCommand& cmd, std::ostream& out, std::ostream& err) {
    const Settings settings = load_settings(cmd.config, process_env());
    const auto parsed = parse_dataset(read_file(cmd.corpus));
    const BackendConfig bcfg = backend_config(settings, cmd.backend);
    auto backend = make_summarizer(bcfg, settings.template_dir);
    auto provider = make_provider(cmd.provider, settings.embed_url, settings.embed_key);

    EvalConfig config;
    config.buckets = BucketConfig::defaults(cmd.task);
    config.workers = cmd.workers;
    config.max_summary_tokens = cmd.max_summary_tokens;
    config.cancel = &g_interrupted;

    RunManifest manifest;
    manifest.status = "incomplete";
    manifest.task = std::string(to_string(cmd.task));
    manifest.backend_id = backend->id();
    manifest.backend_spec = cmd.backend;
    manifest.provider = provider->describe();
    manifest.buckets = config.buckets;
    manifest.scoring = config.scoring;
    manifest.max_summary_tokens = config.max_summary_tokens;
    manifest.corpus_sha256 = corpus_hash(parsed.entries);
    manifest.entry_count = parsed.entries.size();
    manifest.created_at = utc_now();

    // The marker stays until the run completes, so an interrupted directory is never mistaken for a result.
    std::filesystem::create_directories(cmd.out);
    write_file(cmd.out / "manifest.json", manifest_to_json(manifest));

    auto previous = std::signal(SIGINT, on_interrupt);
    std::vector<SampleScore> scores;
    try {
        scores = run_eval(parsed.entries, cmd.task, *backend, *provider, config);
    } catch (const EvalAborted& e) {
        std::signal(SIGINT, previous);
        err << "medsum eval: " << e.what() << " (" << e.completed() << " samples completed; "
            << cmd.out.string() << " left incomplete)\n";
        return kExitRuntime;
    }
    std::signal(SIGINT, previous);

    const auto agg = aggregate(scores, config.buckets);
    manifest.status = "complete";
    write_run(cmd.out, scores, agg, manifest);
    out << "evaluated " << scores.size() << " samples with " << backend->id() << " (" << agg.degenerate_count
        << " degenerate) -> " << cmd.out.string() << "\n";
    return kExitOk;
}

int run_compare(const CompareCommand& cmd, std::ostream& out) {
    const auto a = read_run(cmd.a);
    const auto b = read_run(cmd.b);
    if (a.manifest.corpus_sha256 != b.manifest.corpus_sha256)
        throw ValidationError("runs " + cmd.a.string() + " and " + cmd.b.string() + " were made on different corpora");
    if (a.manifest.task != b.manifest.task)
        throw ValidationError("runs " + cmd.a.string() + " and " + cmd.b.string() + " evaluate different tasks");
    const auto report = compare(a.scores, b.scores, a.manifest.buckets);
    write_comparison(cmd.out, report, cmd.charts);
    out << "compared " << report.samples.size() << " samples: " << report.a.backend_id << " vs "
        << report.b.backend_id << " -> " << cmd.out.string() << "\n";
    return kExitOk;
}

int run_serve(const ServeCommand& cmd, std::ostream& out) {
    Settings settings = load_settings(cmd.config, process_env());
    if (cmd.addr) settings.addr = *cmd.addr;
    if (cmd.backend) settings.backend = *cmd.backend;

    std::shared_ptr<SummaryStore> store = open_store(settings.db_url);
    BackendSet backends;
    if (settings.backend != "none") {
        auto backend = make_summarizer(backend_config(settings, settings.backend), settings.template_dir);
        for (TaskKind t : kAllTasks) backends[t] = backend;
    }

    ServiceConfig config;
    config.set_address(settings.addr);
    config.cors_origin = settings.cors_origin;
    config.max_body_bytes = settings.max_body_bytes;
    config.worker_threads = settings.workers;
    config.request_log = &std::cerr;

    Service service(store, backends, config);
    HttpServer server(service, config);
    auto prev_int = std::signal(SIGINT, on_interrupt);
    auto prev_term = std::signal(SIGTERM, on_interrupt);
    const int port = server.start();
    out << "medsum serving on " << config.host << ":" << port << "\n" << std::flush;
    while (!g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    std::signal(SIGINT, prev_int);
    std::signal(SIGTERM, prev_term);
    return kExitOk;
}

}  // namespace

int execute(const Command& command, std::ostream& out, std::ostream& err) {
    const char* name = std::visit(
        [](const auto& c) -> const char* {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, IngestCommand>) return "ingest";
            else if constexpr (std::is_same_v<T, EvalCommand>) return "eval";
            else if constexpr (std::is_same_v<T, CompareCommand>) return "compare";
            else return "serve";
        },
        command);
    try {
        return std::visit(
            [&](const auto& c) -> int {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, IngestCommand>) return run_ingest(c, out);
                else if constexpr (std::is_same_v<T, EvalCommand>) return run_eval_command(c, out, err);
                else if constexpr (std::is_same_v<T, CompareCommand>) return run_compare(c, out);
                else return run_serve(c, out);
            },
            command);
    } catch (const ParseError& e) {
        err << "medsum " << name << ": " << e.what() << " (byte offset " << e.byte_offset() << ")\n";
    } catch (const RecordError& e) {
        err << "medsum " << name << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "medsum " << name << ": " << e.what() << "\n";
    }
    return kExitRuntime;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    ParseResult parsed = parse_args(args);
    if (!parsed.command) {
        (parsed.exit_code == kExitOk ? std::cout : std::cerr) << parsed.output;
        return parsed.exit_code;
    }
    return execute(*parsed.command, std::cout, std::cerr);
}

}  // namespace medsum::cli
