// notifsurv command-line tool: simulate, ingest, train, evaluate, score, decide.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
// failure, 1 anything else.

#include "notifsurv.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace notifsurv;

namespace {

constexpr const char* kToolVersion = "0.1.0";

// ------------------------------------------------------------------ helpers

std::string sha256_hex(std::string_view data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

template <typename Err>
std::string slurp(const std::string& path, const std::string& what)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Err("cannot open " + what + " '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string utc_timestamp(std::time_t t)
{
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// SOURCE_DATE_EPOCH pins timestamps so manifests are reproducible.
std::string now_timestamp()
{
    if (const char* s = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(s, &end, 10);
        if (end != s && *end == '\0') {
            return utc_timestamp(static_cast<std::time_t>(v));
        }
    }
    return utc_timestamp(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now()));
}

std::vector<double> parse_number_list(const std::string& s, const std::string& what)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception&) {
            throw ConfigError(what + ": '" + item + "' is not a number");
        }
    }
    if (out.empty()) {
        throw ConfigError(what + " is empty");
    }
    return out;
}

std::vector<std::string> split_names(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

// ------------------------------------------------------------------ run context

struct Common {
    std::string config_path;
    std::string out_dir;
    bool force = false;
    unsigned threads = 1;
    bool print_config = false;
};

void add_common(CLI::App* sub, Common& c)
{
    sub->add_option("--config", c.config_path, "JSON config file (flags override its values)");
    sub->add_option("--out", c.out_dir, "output directory");
    sub->add_flag("--force", c.force, "overwrite existing output files");
    sub->add_option("--threads", c.threads, "maximum worker threads")->check(CLI::Range(1u, 1024u));
    sub->add_flag("--print-config", c.print_config, "print the effective configuration and exit");
}

json load_config(const Common& c)
{
    if (c.config_path.empty()) {
        return json::object();
    }
    std::istringstream in(slurp<ConfigError>(c.config_path, "config"));
    json j = io::parse_document(in, "config '" + c.config_path + "'");
    if (!j.is_object()) {
        throw ConfigError("config '" + c.config_path + "' must be a JSON object");
    }
    return j;
}

/// Collects outputs in memory and writes them only after everything has
/// been validated and computed.
class Run {
public:
    Run(std::string command, const Common& common) : command_(std::move(command)), common_(common)
    {
        started_ = now_timestamp();
    }

    void require_out() const
    {
        if (common_.out_dir.empty()) {
            throw ConfigError(command_ + ": --out is required");
        }
    }

    /// Fails early if an output would be overwritten without --force.
    void check_overwrite(const std::vector<std::string>& names) const
    {
        require_out();
        if (common_.force) {
            return;
        }
        const fs::path dir(common_.out_dir);
        if (fs::exists(dir) && !fs::is_directory(dir)) {
            throw ConfigError("output path '" + common_.out_dir + "' exists and is not a directory");
        }
        for (const auto& n : names) {
            if (fs::exists(dir / n)) {
                throw ConfigError("refusing to overwrite '" + (dir / n).string() + "' (use --force)");
            }
        }
        if (fs::exists(dir / "manifest.json")) {
            throw ConfigError("refusing to overwrite '" + (dir / "manifest.json").string() + "' (use --force)");
        }
    }

    std::string input(const std::string& path, const std::string& what)
    {
        std::string data = slurp<DataError>(path, what);
        inputs_.push_back({{"role", what}, {"path", path}, {"sha256", sha256_hex(data)}});
        return data;
    }

    void output(const std::string& name, std::string content) { outputs_.emplace_back(name, std::move(content)); }

    void set_config(const json& cfg) { config_ = cfg; }
    void set_seed(std::uint64_t seed) { seed_ = seed; }
    void set_model_version(const std::string& v) { model_version_ = v; }

    void commit()
    {
        std::vector<std::string> names;
        for (const auto& [n, _] : outputs_) {
            names.push_back(n);
        }
        check_overwrite(names);
        const fs::path dir(common_.out_dir);
        fs::create_directories(dir);

        json outs = json::object();
        for (const auto& [n, content] : outputs_) {
            write_atomic(dir / n, content);
            outs[n] = sha256_hex(content);
        }
        const std::string config_text = config_.dump();
        json manifest = {
            {"command", command_},
            {"tool_version", kToolVersion},
            {"config", config_},
            {"config_digest", sha256_hex(config_text)},
            {"inputs", inputs_},
            {"outputs", outs},
            {"model_version", model_version_ ? json(*model_version_) : json(nullptr)},
            {"seed", seed_ ? json(*seed_) : json(nullptr)},
            {"timestamps", {{"started", started_}, {"finished", now_timestamp()}}},
        };
        write_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
    }

private:
    static void write_atomic(const fs::path& target, const std::string& content)
    {
        const fs::path tmp = target.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) {
                throw DataError("cannot write '" + tmp.string() + "'");
            }
            out << content;
            if (!out) {
                throw DataError("write failed for '" + tmp.string() + "'");
            }
        }
        fs::rename(tmp, target);
    }

    std::string command_;
    const Common& common_;
    std::string started_;
    json config_ = json::object();
    json inputs_ = json::array();
    std::vector<std::pair<std::string, std::string>> outputs_;
    std::optional<std::uint64_t> seed_;
    std::optional<std::string> model_version_;
};

std::string jsonl(const std::vector<json>& rows)
{
    std::string out;
    for (const auto& r : rows) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

FeatureSchema load_schema(Run& run, const std::string& path)
{
    const std::string text = run.input(path, "schema");
    std::istringstream in(text);
    return io::schema_from_json(io::parse_document(in, "schema '" + path + "'"));
}

std::vector<Event> load_events(Run& run, const std::string& path)
{
    std::istringstream in(run.input(path, "events"));
    if (fs::path(path).extension() == ".csv") {
        return io::read_events_csv(in);
    }
    return io::read_events_jsonl(in);
}

json load_json_input(Run& run, const std::string& path, const std::string& what)
{
    std::istringstream in(run.input(path, what));
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError(what + " '" + path + "': " + e.what());
    }
}

// ------------------------------------------------------------------ simulate

struct SimulateArgs {
    Common common;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_users;
};

json default_sim_config()
{
    return {
        {"n_users", 1000},
        {"n_features", 4},
        {"with_interaction", true},
        {"true_sigma", 1.5},
        {"true_coefficients",
         {{"intercept", 3.85},
          {"p1", 0.6},
          {"p2", -0.5},
          {"p3", 0.4},
          {"p4", -0.3},
          {"badge_count", -0.15},
          {"badge_count*p1", 0.05}}},
        {"send_process", {{"kind", "fixed_interval"}, {"interval_hours", 12.0}}},
        {"window_hours", 168.0},
        {"seed", 1},
        {"resolve_last_send", true},
    };
}

int cmd_simulate(const SimulateArgs& a)
{
    Run run("simulate", a.common);
    json raw = a.common.config_path.empty() ? default_sim_config() : load_config(a.common);
    SimConfig cfg = io::sim_config_from_json(raw);
    if (a.seed) {
        cfg.seed = *a.seed;
    }
    if (a.n_users) {
        cfg.n_users = *a.n_users;
    }
    cfg.validate();
    const json effective = io::to_json(cfg);
    if (a.common.print_config) {
        std::cout << effective.dump(2) << "\n";
        return 0;
    }
    run.check_overwrite({"events.jsonl", "ground_truth.json", "schema.json"});
    run.set_config(effective);
    run.set_seed(cfg.seed);

    const auto sim = generate_event_log(cfg, a.common.threads);
    const auto schema = cfg.schema();

    std::ostringstream events;
    io::write_events_jsonl(events, sim.events);

    json users = json::array();
    for (const auto& u : sim.users) {
        users.push_back({{"user_id", u.user_id},
                         {"profile", u.profile},
                         {"sends", u.sends},
                         {"visits", u.visits},
                         {"censored", u.censored}});
    }
    json coef = json::object();
    for (std::size_t i = 0; i < schema.size(); ++i) {
        coef[schema.slots()[i].name] = cfg.true_coefficients[i];
    }
    const json truth = {{"true_coefficients", coef},
                        {"true_sigma", cfg.true_sigma},
                        {"seed", cfg.seed},
                        {"censoring_rate", sim.censoring_rate()},
                        {"users", users}};

    run.output("events.jsonl", events.str());
    run.output("ground_truth.json", truth.dump(2) + "\n");
    run.output("schema.json", io::to_json(schema).dump(2) + "\n");
    run.commit();
    std::cerr << "simulate: " << sim.users.size() << " users, " << sim.events.size() << " events, censoring rate "
              << sim.censoring_rate() << "\n";
    return 0;
}

// ------------------------------------------------------------------ ingest

struct IngestArgs {
    Common common;
    std::string events;
    std::string schema;
    std::optional<std::uint64_t> split_seed;
};

FeatureSchema infer_schema(const std::vector<Event>& events)
{
    std::set<std::string> names;
    for (const auto& e : events) {
        if (e.kind == EventKind::NotificationSend) {
            for (const auto& [k, _] : e.features) {
                names.insert(k);
            }
        }
    }
    return FeatureSchema::standard({names.begin(), names.end()}, true);
}

int cmd_ingest(const IngestArgs& a)
{
    Run run("ingest", a.common);
    PipelineConfig cfg = io::pipeline_config_from_json(load_config(a.common));
    if (a.split_seed) {
        cfg.split_seed = *a.split_seed;
    }
    cfg.validate();
    const json effective = io::to_json(cfg);
    if (a.common.print_config) {
        std::cout << effective.dump(2) << "\n";
        return 0;
    }
    const std::vector<std::string> names = {"observations.jsonl", "train.jsonl", "test.jsonl", "schema.json",
                                            "report.json"};
    run.check_overwrite(names);
    run.set_config(effective);
    run.set_seed(cfg.split_seed);

    const auto events = load_events(run, a.events);
    const FeatureSchema schema = a.schema.empty() ? infer_schema(events) : load_schema(run, a.schema);
    if (events.empty()) {
        std::cerr << "warning: ingest: input contains no events; writing empty outputs\n";
    }
    const auto filtered = filter_outliers(events, cfg);
    BuildStats stats;
    const auto obs = build_observations(filtered.events, schema, cfg, &stats, a.common.threads);
    const auto parts = split(obs, cfg.split_seed);

    auto write = [](const std::vector<Observation>& o) {
        std::ostringstream ss;
        io::write_observations_jsonl(ss, o);
        return ss.str();
    };
    const auto& r = filtered.report;
    const json report = {
        {"events_read", events.size()},
        {"users_total", r.users_total},
        {"users_kept", r.users_kept},
        {"users_dropped", r.dropped_users.size()},
        {"users_over_notifications", r.users_over_notifications},
        {"users_over_visits", r.users_over_visits},
        {"dropped_users", r.dropped_users},
        {"sends", stats.sends},
        {"observations", stats.observations},
        {"uncensored", stats.uncensored},
        {"unresolved_sends", stats.unresolved_sends},
        {"out_of_window_sends", stats.out_of_window_sends},
        {"clamped_durations", stats.clamped_durations},
        {"train_observations", parts.train.size()},
        {"test_observations", parts.test.size()},
    };
    run.output("observations.jsonl", write(obs));
    run.output("train.jsonl", write(parts.train));
    run.output("test.jsonl", write(parts.test));
    run.output("schema.json", io::to_json(schema).dump(2) + "\n");
    run.output("report.json", report.dump(2) + "\n");
    run.commit();
    std::cerr << "ingest: " << obs.size() << " observations (" << parts.train.size() << " train, "
              << parts.test.size() << " test), " << r.dropped_users.size() << " users dropped\n";
    return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
    Common common;
    std::string observations;
    std::string schema;
    std::string model = "aft";
    std::string events;
    std::string labeler = "naive";
    std::optional<double> tol;
    std::optional<int> max_iters;
    std::optional<double> ridge;
};

std::string sibling_schema(const std::string& observations)
{
    return (fs::path(observations).parent_path() / "schema.json").string();
}

int cmd_train(const TrainArgs& a)
{
    Run run("train", a.common);
    OptConfig cfg = io::opt_config_from_json(load_config(a.common));
    if (a.tol) {
        cfg.tol = *a.tol;
    }
    if (a.max_iters) {
        cfg.max_iters = *a.max_iters;
    }
    if (a.ridge) {
        cfg.ridge = *a.ridge;
    }
    cfg.validate();

    std::optional<double> horizon;
    if (a.model.rfind("logistic:", 0) == 0) {
        horizon = parse_number_list(a.model.substr(9), "logistic horizon").front();
        if (!(*horizon > 0.0)) {
            throw ConfigError("logistic horizon must be positive");
        }
    } else if (a.model != "aft") {
        throw ConfigError("--model must be 'aft' or 'logistic:<hours>', got '" + a.model + "'");
    }
    const Labeler labeler = labeler_from_string(a.labeler);

    json effective = io::to_json(cfg);
    effective["model"] = a.model;
    if (horizon) {
        effective["labeler"] = std::string(to_string(labeler));
    }
    if (a.common.print_config) {
        std::cout << effective.dump(2) << "\n";
        return 0;
    }
    if (a.observations.empty()) {
        throw ConfigError("train: --observations is required");
    }
    if (horizon && labeler == Labeler::Naive && a.events.empty()) {
        throw ConfigError("train: logistic with the naive labeler needs --events");
    }
    run.check_overwrite({"model.json"});
    run.set_config(effective);
    run.set_seed(cfg.seed);

    const FeatureSchema schema = load_schema(run, a.schema.empty() ? sibling_schema(a.observations) : a.schema);
    std::istringstream in(run.input(a.observations, "observations"));
    auto obs = io::read_observations_jsonl(in, schema);

    json model;
    if (!horizon) {
        const auto m = fit_aft(obs, schema, cfg);
        run.set_model_version(model_version(m));
        model = io::to_json(m);
        std::cerr << "train: aft fitted on " << obs.size() << " observations, sigma " << m.sigma() << ", "
                  << m.diagnostics.iterations << " iterations\n";
    } else {
        std::vector<bool> labels;
        if (labeler == Labeler::Naive) {
            labels = label_naive(load_events(run, a.events), obs, *horizon);
        } else {
            const auto clean = label_censoring_clean(obs, *horizon);
            std::vector<Observation> kept;
            for (std::size_t i = 0; i < obs.size(); ++i) {
                if (clean[i] != Label::Ambiguous) {
                    kept.push_back(obs[i]);
                    labels.push_back(clean[i] == Label::Positive);
                }
            }
            obs = std::move(kept);
        }
        const auto m = fit_logistic(obs, schema, *horizon, labels, cfg);
        model = io::to_json(m);
        std::cerr << "train: logistic at " << *horizon << " h fitted on " << obs.size() << " observations\n";
    }
    run.output("model.json", model.dump(2) + "\n");
    run.commit();
    return 0;
}

// ------------------------------------------------------------------ evaluate

struct EvaluateArgs {
    Common common;
    std::string aft;
    std::vector<std::string> logistic;
    std::string observations;
    std::string events;
    std::string horizons;
    std::string labelers;
};

int cmd_evaluate(const EvaluateArgs& a)
{
    Run run("evaluate", a.common);
    json cfg = load_config(a.common);
    io::detail::reject_unknown_keys(cfg, {"horizons", "labelers"}, "evaluate config");
    std::vector<double> horizons = io::detail::get_or(cfg, "horizons", default_horizons(), "evaluate config");
    std::vector<std::string> labeler_names =
        io::detail::get_or(cfg, "labelers", std::vector<std::string>{"naive", "censoring_clean"}, "evaluate config");
    if (!a.horizons.empty()) {
        horizons = parse_number_list(a.horizons, "--horizons");
    }
    if (!a.labelers.empty()) {
        labeler_names = split_names(a.labelers);
    }
    std::vector<Labeler> labelers;
    for (const auto& n : labeler_names) {
        labelers.push_back(labeler_from_string(n));
    }
    for (double h : horizons) {
        if (!(h > 0.0) || !std::isfinite(h)) {
            throw ConfigError("horizons must be positive and finite");
        }
    }
    const json effective = {{"horizons", horizons}, {"labelers", labeler_names}};
    if (a.common.print_config) {
        std::cout << effective.dump(2) << "\n";
        return 0;
    }
    if (a.aft.empty() || a.observations.empty()) {
        throw ConfigError("evaluate: --aft and --observations are required");
    }
    const bool naive = std::find(labelers.begin(), labelers.end(), Labeler::Naive) != labelers.end();
    if (naive && a.events.empty()) {
        throw ConfigError("evaluate: the naive labeler needs --events");
    }
    run.check_overwrite({"auc.csv", "auc.json"});
    run.set_config(effective);

    const auto aft = io::aft_model_from_json(load_json_input(run, a.aft, "aft model"));
    run.set_model_version(model_version(aft));
    std::vector<LogisticModel> logistic;
    for (const auto& p : a.logistic) {
        logistic.push_back(io::logistic_model_from_json(load_json_input(run, p, "logistic model")));
        if (logistic.back().schema.id() != aft.schema.id()) {
            throw DataError("logistic model '" + p + "' uses a different feature schema than the AFT model");
        }
    }
    std::istringstream in(run.input(a.observations, "observations"));
    const auto test = io::read_observations_jsonl(in, aft.schema);
    const auto events = naive ? load_events(run, a.events) : std::vector<Event>{};

    const auto report = auc_vs_horizon(aft, logistic, test, events, horizons, labelers);
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"t_hours", r.t_hours},
                        {"auc_aft", io::detail::finite_or_null(r.auc_aft)},
                        {"auc_logistic", io::detail::finite_or_null(r.auc_logistic)},
                        {"n", r.n},
                        {"n_ambiguous", r.n_ambiguous},
                        {"labeler", std::string(to_string(r.labeler))},
                        {"insufficient_data", r.insufficient_data}});
    }
    json refs = json::array();
    for (const auto& p : reference_points()) {
        refs.push_back({{"t_hours", p.t_hours},
                        {"auc_aft", io::detail::finite_or_null(p.auc_aft)},
                        {"auc_logistic", io::detail::finite_or_null(p.auc_logistic)}});
    }
    const json sidecar = {{"rows", rows}, {"reference_points", refs}};
    run.output("auc.csv", to_csv(report));
    run.output("auc.json", sidecar.dump(2) + "\n");
    run.commit();
    std::cout << to_text_table(report);
    return 0;
}

// ------------------------------------------------------------------ score

struct ScoreArgs {
    Common common;
    std::string model;
    std::string contexts;
    std::optional<double> horizon;
};

int cmd_score(const ScoreArgs& a)
{
    Run run("score", a.common);
    json cfg = load_config(a.common);
    io::detail::reject_unknown_keys(cfg, {"horizon_T"}, "score config");
    double horizon = io::detail::get_or(cfg, "horizon_T", 24.0, "score config");
    if (a.horizon) {
        horizon = *a.horizon;
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw ConfigError("horizon_T must be positive and finite");
    }
    const json effective = {{"horizon_T", horizon}};
    if (a.common.print_config) {
        std::cout << effective.dump(2) << "\n";
        return 0;
    }
    if (a.model.empty() || a.contexts.empty()) {
        throw ConfigError("score: --model and --contexts are required");
    }
    run.check_overwrite({"scores.jsonl"});
    run.set_config(effective);

    const auto model = io::aft_model_from_json(load_json_input(run, a.model, "aft model"));
    run.set_model_version(model_version(model));
    std::istringstream in(run.input(a.contexts, "contexts"));
    const auto rows = io::read_contexts_jsonl(in, model.schema, horizon);
    std::vector<json> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(io::score_row_json(r.user_id, r.ctx, score_delta_effect(r.ctx, model), r.p_click));
    }
    run.output("scores.jsonl", jsonl(out));
    run.commit();
    std::cerr << "score: " << out.size() << " rows\n";
    return 0;
}

// ------------------------------------------------------------------ decide

struct DecideArgs {
    Common common;
    std::string scores;
    std::optional<std::string> rule;
    std::optional<std::string> kappa;
    std::optional<double> c_click;
    std::optional<double> c_send;
    std::optional<std::uint64_t> placeholder_click_seed;
};

int cmd_decide(const DecideArgs& a)
{
    Run run("decide", a.common);
    json raw = load_config(a.common);
    if (a.rule) {
        raw["rule"] = *a.rule;
    }
    if (a.kappa) {
        const std::string& k = *a.kappa;
        if (k == "inf" || k == "-inf") {
            raw["kappa"] = k;
        } else {
            raw["kappa"] = parse_number_list(k, "--kappa").front();
        }
    }
    if (a.c_click) {
        raw["c_click"] = *a.c_click;
    }
    if (a.c_send) {
        raw["c_send"] = *a.c_send;
    }
    const auto cfg = io::policy_config_from_json(raw);
    json effective = io::to_json(cfg);
    if (a.placeholder_click_seed) {
        effective["placeholder_click_seed"] = *a.placeholder_click_seed;
    }
    if (a.common.print_config) {
        std::cout << effective.dump(2) << "\n";
        return 0;
    }
    if (a.scores.empty()) {
        throw ConfigError("decide: --scores is required");
    }
    const std::vector<std::string> names = cfg.rule == io::PolicyRule::Moo
                                               ? std::vector<std::string>{"decisions.jsonl", "moo.json"}
                                               : std::vector<std::string>{"decisions.jsonl"};
    run.check_overwrite(names);
    run.set_config(effective);
    if (a.placeholder_click_seed) {
        run.set_seed(*a.placeholder_click_seed);
    }

    const bool moo = cfg.rule == io::PolicyRule::Moo;
    std::istringstream in(run.input(a.scores, "scores"));
    auto cs = io::read_candidates_jsonl(in, moo && !a.placeholder_click_seed);
    if (a.placeholder_click_seed) {
        // Placeholder click model: uniform draws keyed by user, for runs
        // without an upstream click predictor.
        std::istringstream again(run.input(a.scores, "scores"));
        std::size_t i = 0;
        io::detail::for_each_jsonl(again, "scores", [&](const json& j, std::size_t) {
            if (!j.contains("p_click")) {
                std::mt19937_64 rng(notifsurv::detail::keyed_hash(cs[i].user_id, *a.placeholder_click_seed));
                cs[i].p_click = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            }
            ++i;
        });
    }

    std::vector<json> out;
    std::optional<json> summary;
    if (cfg.rule == io::PolicyRule::Threshold || cfg.rule == io::PolicyRule::Ratio) {
        const auto ds = cfg.rule == io::PolicyRule::Threshold ? threshold_rule(cs, cfg.kappa) : ratio_rule(cs, cfg.kappa);
        for (const auto& d : ds) {
            out.push_back(io::decision_json(d, cfg.rule, nullptr));
        }
    } else {
        const MooConfig mc{cfg.c_click, cfg.c_send};
        const auto sol = moo_solve(cs, mc);
        for (const auto& d : round_moo(cs, sol, mc)) {
            out.push_back(io::decision_json(d, cfg.rule, &sol));
        }
        summary = json{{"feasible", sol.feasible},
                       {"message", sol.message},
                       {"objective", sol.objective},
                       {"kappa1", sol.kappa1},
                       {"kappa2", sol.kappa2},
                       {"clicks", sol.clicks},
                       {"sends", sol.sends},
                       {"y", sol.y}};
        if (!sol.feasible) {
            std::cerr << "warning: decide: MOO problem infeasible: " << sol.message << "\n";
        }
    }
    run.output("decisions.jsonl", jsonl(out));
    if (summary) {
        run.output("moo.json", summary->dump(2) + "\n");
    }
    run.commit();
    const auto sends = std::count_if(out.begin(), out.end(), [](const json& j) { return j.at("send").get<bool>(); });
    std::cerr << "decide: " << out.size() << " candidates, " << sends << " sends\n";
    return 0;
}

int report(const char* kind, const std::exception& e, int code)
{
    std::cerr << "error (" << kind << "): " << e.what() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Survival-model notification delivery toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "generate a synthetic event log with known ground truth");
    add_common(s, sim.common);
    s->add_option("--seed", sim.seed, "override the random seed");
    s->add_option("--n-users", sim.n_users, "override the number of users");

    IngestArgs ing;
    auto* i = app.add_subcommand("ingest", "turn an event log into censored observations");
    add_common(i, ing.common);
    i->add_option("--events", ing.events, "event log (.jsonl or .csv)");
    i->add_option("--schema", ing.schema, "feature schema JSON (default: inferred from event features)");
    i->add_option("--split-seed", ing.split_seed, "override the train/test split seed");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "fit the Weibull AFT model or a per-horizon logistic baseline");
    add_common(t, tr.common);
    t->add_option("--observations", tr.observations, "observations JSONL");
    t->add_option("--schema", tr.schema, "feature schema JSON (default: schema.json beside the observations)");
    t->add_option("--model", tr.model, "aft or logistic:<hours>");
    t->add_option("--events", tr.events, "event log, for naive logistic labels");
    t->add_option("--labeler", tr.labeler, "logistic training labels: naive or censoring_clean");
    t->add_option("--tol", tr.tol, "gradient tolerance");
    t->add_option("--max-iters", tr.max_iters, "iteration cap");
    t->add_option("--ridge", tr.ridge, "L2 penalty on non-intercept coefficients");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "AUC against the horizon for the AFT and logistic models");
    add_common(e, ev.common);
    e->add_option("--aft", ev.aft, "AFT model JSON");
    e->add_option("--logistic", ev.logistic, "logistic model JSON (one per horizon)");
    e->add_option("--observations", ev.observations, "test observations JSONL");
    e->add_option("--events", ev.events, "event log, for the naive labeler");
    e->add_option("--horizons", ev.horizons, "comma-separated horizons in hours");
    e->add_option("--labelers", ev.labelers, "comma-separated: naive, censoring_clean");

    ScoreArgs sc;
    auto* c = app.add_subcommand("score", "delta effect for each scoring context");
    add_common(c, sc.common);
    c->add_option("--model", sc.model, "AFT model JSON");
    c->add_option("--contexts", sc.contexts, "scoring contexts JSONL");
    c->add_option("--horizon", sc.horizon, "default horizon in hours");

    DecideArgs de;
    auto* d = app.add_subcommand("decide", "send decisions from scores");
    add_common(d, de.common);
    d->add_option("--scores", de.scores, "scores JSONL");
    d->add_option("--rule", de.rule, "threshold, ratio or moo");
    d->add_option("--kappa", de.kappa, "threshold (number, inf or -inf)");
    d->add_option("--c-click", de.c_click, "minimum expected clicks (moo)");
    d->add_option("--c-send", de.c_send, "maximum sends (moo)");
    d->add_option("--placeholder-click-seed", de.placeholder_click_seed,
                  "fill missing p_click with uniform placeholder draws");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForVersion& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return 2;
    }

    try {
        if (s->parsed()) {
            return cmd_simulate(sim);
        }
        if (i->parsed()) {
            if (ing.events.empty() && !ing.common.print_config) {
                throw ConfigError("ingest: --events is required");
            }
            return cmd_ingest(ing);
        }
        if (t->parsed()) {
            return cmd_train(tr);
        }
        if (e->parsed()) {
            return cmd_evaluate(ev);
        }
        if (c->parsed()) {
            return cmd_score(sc);
        }
        if (d->parsed()) {
            return cmd_decide(de);
        }
    } catch (const ConfigError& ex) {
        return report("config", ex, 2);
    } catch (const DataError& ex) {
        return report("data", ex, 3);
    } catch (const NumericalError& ex) {
        return report("numerical", ex, 4);
    } catch (const std::domain_error& ex) {
        return report("numerical", ex, 4);
    } catch (const fs::filesystem_error& ex) {
        return report("io", ex, 3);
    } catch (const std::exception& ex) {
        return report("internal", ex, 1);
    }
    return 1;
}
