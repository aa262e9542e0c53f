#pragma once

// Line-delimited JSON and CSV formats, config documents, and model
// persistence. Layouts are described in docs/FORMATS.md.

#include "notifsurv/aft.hpp"
#include "notifsurv/errors.hpp"
#include "notifsurv/evaluation.hpp"
#include "notifsurv/events.hpp"
#include "notifsurv/logistic.hpp"
#include "notifsurv/optimize.hpp"
#include "notifsurv/pipeline.hpp"
#include "notifsurv/policies.hpp"
#include "notifsurv/schema.hpp"
#include "notifsurv/scoring.hpp"
#include "notifsurv/simulator.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <initializer_list>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace notifsurv::io {

using json = nlohmann::json;

inline constexpr int kModelFormatVersion = 1;

namespace detail {

template <typename Err = ConfigError>
void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object()) {
        throw Err(where + ": expected a JSON object");
    }
    for (const auto& [k, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            ok = ok || k == a;
        }
        if (!ok) {
            throw Err(where + ": unknown key '" + k + "'");
        }
    }
}

template <typename T, typename Err = ConfigError>
T get_or(const json& j, const char* key, T fallback, const std::string& where)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Err(where + ": bad value for '" + key + "': " + e.what());
    }
}

template <typename T, typename Err = DataError>
T require(const json& j, const char* key, const std::string& where)
{
    if (!j.contains(key)) {
        throw Err(where + ": missing '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Err(where + ": bad value for '" + key + "': " + e.what());
    }
}

inline json parse_line(const std::string& line, std::size_t lineno, const std::string& what)
{
    try {
        return json::parse(line);
    } catch (const json::parse_error& e) {
        throw DataError(what + " line " + std::to_string(lineno) + ": " + e.what());
    }
}

// JSON has no infinities; unbounded window edges are written as null.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <typename Fn>
void for_each_jsonl(std::istream& in, const std::string& what, Fn&& fn)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        fn(parse_line(line, lineno, what), lineno);
    }
}

inline std::string where(const std::string& what, std::size_t lineno)
{
    return what + " line " + std::to_string(lineno);
}

} // namespace detail

// ---------------------------------------------------------------- events

inline EventKind event_kind_from_string(const std::string& s)
{
    if (s == "send" || s == "notification_send" || s == "NotificationSend") {
        return EventKind::NotificationSend;
    }
    if (s == "visit" || s == "Visit") {
        return EventKind::Visit;
    }
    throw DataError("unknown event kind '" + s + "'");
}

inline const char* to_string(EventKind k) { return k == EventKind::Visit ? "visit" : "send"; }

inline Event event_from_json(const json& j, const std::string& where)
{
    Event e;
    e.user_id = detail::require<std::string>(j, "user_id", where);
    e.ts_hours = detail::require<double>(j, "ts_hours", where);
    e.kind = event_kind_from_string(detail::require<std::string>(j, "kind", where));
    e.badge_count = detail::get_or<int, DataError>(j, "badge_count", 0, where);
    if (j.contains("features")) {
        if (!j.at("features").is_object()) {
            throw DataError(where + ": 'features' must be an object");
        }
        for (const auto& [k, v] : j.at("features").items()) {
            if (!v.is_number()) {
                throw DataError(where + ": feature '" + k + "' is not a number");
            }
            e.features[k] = v.get<double>();
        }
    }
    validate_event(e);
    return e;
}

inline json to_json(const Event& e)
{
    json j = {{"user_id", e.user_id}, {"ts_hours", e.ts_hours}, {"kind", to_string(e.kind)}};
    if (e.kind == EventKind::NotificationSend) {
        j["badge_count"] = e.badge_count;
        j["features"] = e.features;
    }
    return j;
}

inline std::vector<Event> read_events_jsonl(std::istream& in)
{
    std::vector<Event> out;
    detail::for_each_jsonl(in, "events", [&](const json& j, std::size_t n) {
        out.push_back(event_from_json(j, detail::where("events", n)));
    });
    return out;
}

inline void write_events_jsonl(std::ostream& out, const std::vector<Event>& events)
{
    for (const auto& e : events) {
        out << to_json(e).dump() << '\n';
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

inline double parse_double(const std::string& s, const std::string& where)
{
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw DataError(where + ": '" + s + "' is not a number");
    }
}

} // namespace detail

/// CSV variant: header row with user_id, ts_hours, kind, badge_count; every
/// other column is a numeric feature. Empty feature cells are omitted.
inline std::vector<Event> read_events_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) {
        return {};
    }
    const auto header = detail::split_csv_line(line);
    int c_user = -1;
    int c_ts = -1;
    int c_kind = -1;
    int c_badge = -1;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
        const auto& h = header[static_cast<std::size_t>(i)];
        if (h == "user_id") c_user = i;
        else if (h == "ts_hours") c_ts = i;
        else if (h == "kind") c_kind = i;
        else if (h == "badge_count") c_badge = i;
    }
    if (c_user < 0 || c_ts < 0 || c_kind < 0) {
        throw DataError("events CSV header needs user_id, ts_hours and kind columns");
    }
    std::vector<Event> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::string where = detail::where("events CSV", lineno);
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw DataError(where + ": expected " + std::to_string(header.size()) + " cells");
        }
        Event e;
        e.user_id = cells[static_cast<std::size_t>(c_user)];
        e.ts_hours = detail::parse_double(cells[static_cast<std::size_t>(c_ts)], where);
        e.kind = event_kind_from_string(cells[static_cast<std::size_t>(c_kind)]);
        if (c_badge >= 0 && !cells[static_cast<std::size_t>(c_badge)].empty()) {
            e.badge_count = static_cast<int>(detail::parse_double(cells[static_cast<std::size_t>(c_badge)], where));
        }
        for (std::size_t i = 0; i < header.size(); ++i) {
            const auto ii = static_cast<int>(i);
            if (ii == c_user || ii == c_ts || ii == c_kind || ii == c_badge || cells[i].empty()) {
                continue;
            }
            e.features[header[i]] = detail::parse_double(cells[i], where);
        }
        validate_event(e);
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------- schema

inline json to_json(const FeatureSchema& s)
{
    json slots = json::array();
    for (const auto& slot : s.slots()) {
        json j = {{"name", slot.name}, {"kind", std::string(notifsurv::to_string(slot.kind))}};
        if (slot.kind == SlotKind::Interaction) {
            j["parents"] = slot.parents;
        }
        if (slot.kind == SlotKind::Raw || slot.online) {
            j["online"] = slot.online;
        }
        slots.push_back(std::move(j));
    }
    return {{"schema_id", s.id()}, {"slots", slots}};
}

inline FeatureSchema schema_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("slots") || !j.at("slots").is_array()) {
        throw ConfigError("schema: expected an object with a 'slots' array");
    }
    std::vector<Slot> slots;
    for (const auto& js : j.at("slots")) {
        detail::reject_unknown_keys(js, {"name", "kind", "parents", "online"}, "schema slot");
        Slot s;
        s.name = detail::require<std::string, ConfigError>(js, "name", "schema slot");
        s.kind = slot_kind_from_string(detail::require<std::string, ConfigError>(js, "kind", "schema slot '" + s.name + "'"));
        s.parents = detail::get_or<std::vector<std::string>>(js, "parents", {}, "schema slot '" + s.name + "'");
        s.online = detail::get_or<bool>(js, "online", false, "schema slot '" + s.name + "'");
        slots.push_back(std::move(s));
    }
    FeatureSchema schema(std::move(slots));
    if (j.contains("schema_id") && j.at("schema_id").get<std::string>() != schema.id()) {
        throw ConfigError("schema: stored schema_id does not match its slots");
    }
    return schema;
}

// ---------------------------------------------------------------- observations

inline json to_json(const Observation& o)
{
    return {{"user_id", o.user_id},
            {"origin_ts", o.origin_timestamp},
            {"t_hours", o.duration},
            {"censored", !o.uncensored},
            {"x", o.features.values}};
}

inline std::vector<Observation> read_observations_jsonl(std::istream& in, const FeatureSchema& schema)
{
    std::vector<Observation> out;
    detail::for_each_jsonl(in, "observations", [&](const json& j, std::size_t n) {
        const std::string w = detail::where("observations", n);
        Observation o;
        o.user_id = detail::require<std::string>(j, "user_id", w);
        o.origin_timestamp = detail::get_or<double, DataError>(j, "origin_ts", 0.0, w);
        o.duration = detail::require<double>(j, "t_hours", w);
        o.uncensored = !detail::require<bool>(j, "censored", w);
        o.features.values = detail::require<std::vector<double>>(j, "x", w);
        o.features.schema_id = schema.id();
        if (o.features.values.size() != schema.size()) {
            throw DataError(w + ": x has " + std::to_string(o.features.values.size()) + " slots, schema has "
                            + std::to_string(schema.size()));
        }
        if (!(o.duration > 0.0) || !std::isfinite(o.duration)) {
            throw DataError(w + ": t_hours must be positive");
        }
        out.push_back(std::move(o));
    });
    return out;
}

inline void write_observations_jsonl(std::ostream& out, const std::vector<Observation>& obs)
{
    for (const auto& o : obs) {
        out << to_json(o).dump() << '\n';
    }
}

// ---------------------------------------------------------------- configs

inline PipelineConfig pipeline_config_from_json(const json& j)
{
    detail::reject_unknown_keys(j, {"duration_floor_hours", "max_notifications", "max_visits", "split_seed",
                                    "window_start", "window_end"},
                                "pipeline config");
    PipelineConfig c;
    const std::string w = "pipeline config";
    c.duration_floor_hours = detail::get_or(j, "duration_floor_hours", c.duration_floor_hours, w);
    c.max_notifications = detail::get_or(j, "max_notifications", c.max_notifications, w);
    c.max_visits = detail::get_or(j, "max_visits", c.max_visits, w);
    c.split_seed = detail::get_or(j, "split_seed", c.split_seed, w);
    c.window_start = detail::get_or(j, "window_start", c.window_start, w);
    c.window_end = detail::get_or(j, "window_end", c.window_end, w);
    c.validate();
    return c;
}

inline json to_json(const PipelineConfig& c)
{
    return {{"duration_floor_hours", c.duration_floor_hours},
            {"max_notifications", c.max_notifications},
            {"max_visits", c.max_visits},
            {"split_seed", c.split_seed},
            {"window_start", detail::finite_or_null(c.window_start)},
            {"window_end", detail::finite_or_null(c.window_end)}};
}

inline OptConfig opt_config_from_json(const json& j)
{
    detail::reject_unknown_keys(j, {"tol", "max_iters", "ridge", "seed", "method", "memory"}, "opt config");
    OptConfig c;
    const std::string w = "opt config";
    c.tol = detail::get_or(j, "tol", c.tol, w);
    c.max_iters = detail::get_or(j, "max_iters", c.max_iters, w);
    c.ridge = detail::get_or(j, "ridge", c.ridge, w);
    c.seed = detail::get_or(j, "seed", c.seed, w);
    c.memory = detail::get_or(j, "memory", c.memory, w);
    const auto method = detail::get_or<std::string>(j, "method", "lbfgs", w);
    if (method == "lbfgs") {
        c.method = OptMethod::Lbfgs;
    } else if (method == "gradient_descent") {
        c.method = OptMethod::GradientDescent;
    } else {
        throw ConfigError("opt config: method must be 'lbfgs' or 'gradient_descent'");
    }
    c.validate();
    return c;
}

inline json to_json(const OptConfig& c)
{
    return {{"tol", c.tol},
            {"max_iters", c.max_iters},
            {"ridge", c.ridge},
            {"seed", c.seed},
            {"method", c.method == OptMethod::Lbfgs ? "lbfgs" : "gradient_descent"},
            {"memory", c.memory}};
}

inline SimConfig sim_config_from_json(const json& j)
{
    detail::reject_unknown_keys(j, {"n_users", "n_features", "with_interaction", "true_coefficients", "true_sigma",
                                    "send_process", "window_hours", "seed", "resolve_last_send"},
                                "sim config");
    SimConfig c;
    const std::string w = "sim config";
    c.n_users = detail::get_or(j, "n_users", c.n_users, w);
    c.n_features = detail::get_or(j, "n_features", c.n_features, w);
    c.with_interaction = detail::get_or(j, "with_interaction", c.with_interaction, w);
    c.true_sigma = detail::get_or(j, "true_sigma", c.true_sigma, w);
    c.window_hours = detail::get_or(j, "window_hours", c.window_hours, w);
    c.seed = detail::get_or(j, "seed", c.seed, w);
    c.resolve_last_send = detail::get_or(j, "resolve_last_send", c.resolve_last_send, w);
    if (j.contains("true_coefficients")) {
        const auto& tc = j.at("true_coefficients");
        const auto names = c.schema().names();
        if (tc.is_object()) {
            c.true_coefficients.assign(names.size(), 0.0);
            for (const auto& [k, v] : tc.items()) {
                auto it = std::find(names.begin(), names.end(), k);
                if (it == names.end()) {
                    throw ConfigError("sim config: true_coefficients names unknown slot '" + k + "'");
                }
                if (!v.is_number()) {
                    throw ConfigError("sim config: coefficient '" + k + "' is not a number");
                }
                c.true_coefficients[static_cast<std::size_t>(it - names.begin())] = v.get<double>();
            }
        } else {
            c.true_coefficients = detail::get_or<std::vector<double>>(j, "true_coefficients", {}, w);
        }
    } else {
        throw ConfigError("sim config: true_coefficients is required");
    }
    if (j.contains("send_process")) {
        const auto& sp = j.at("send_process");
        detail::reject_unknown_keys(sp, {"kind", "interval_hours", "rate_per_hour"}, "sim config send_process");
        const auto kind = detail::get_or<std::string>(sp, "kind", "fixed_interval", w);
        if (kind == "fixed_interval") {
            c.send_process.kind = SendProcessKind::FixedInterval;
        } else if (kind == "poisson") {
            c.send_process.kind = SendProcessKind::Poisson;
        } else {
            throw ConfigError("sim config: send_process.kind must be 'fixed_interval' or 'poisson'");
        }
        c.send_process.interval_hours = detail::get_or(sp, "interval_hours", c.send_process.interval_hours, w);
        c.send_process.rate_per_hour = detail::get_or(sp, "rate_per_hour", c.send_process.rate_per_hour, w);
    }
    c.validate();
    return c;
}

inline json to_json(const SimConfig& c)
{
    json coef = json::object();
    const auto names = c.schema().names();
    for (std::size_t i = 0; i < names.size() && i < c.true_coefficients.size(); ++i) {
        coef[names[i]] = c.true_coefficients[i];
    }
    return {{"n_users", c.n_users},
            {"n_features", c.n_features},
            {"with_interaction", c.with_interaction},
            {"true_coefficients", coef},
            {"true_sigma", c.true_sigma},
            {"send_process",
             {{"kind", c.send_process.kind == SendProcessKind::FixedInterval ? "fixed_interval" : "poisson"},
              {"interval_hours", c.send_process.interval_hours},
              {"rate_per_hour", c.send_process.rate_per_hour}}},
            {"window_hours", c.window_hours},
            {"seed", c.seed},
            {"resolve_last_send", c.resolve_last_send}};
}

enum class PolicyRule { Threshold, Ratio, Moo };

struct PolicyConfig {
    PolicyRule rule = PolicyRule::Threshold;
    double kappa = 0.0;
    double c_click = 0.0;
    double c_send = 0.0;
    double horizon_hours = 4.0;
    double evaluation_cadence_hours = 4.0; // consumed by external schedulers
};

inline const char* to_string(PolicyRule r)
{
    switch (r) {
    case PolicyRule::Threshold: return "threshold";
    case PolicyRule::Ratio: return "ratio";
    case PolicyRule::Moo: return "moo";
    }
    return "?";
}

inline PolicyConfig policy_config_from_json(const json& j)
{
    detail::reject_unknown_keys(j, {"rule", "kappa", "c_click", "c_send", "horizon_T", "evaluation_cadence_hours"},
                                "policy config");
    PolicyConfig c;
    const std::string w = "policy config";
    const auto rule = detail::get_or<std::string>(j, "rule", "threshold", w);
    if (rule == "threshold") {
        c.rule = PolicyRule::Threshold;
    } else if (rule == "ratio") {
        c.rule = PolicyRule::Ratio;
    } else if (rule == "moo") {
        c.rule = PolicyRule::Moo;
    } else {
        throw ConfigError("policy config: rule must be threshold, ratio or moo");
    }
    // kappa may be written as a string to express infinities.
    if (j.contains("kappa") && j.at("kappa").is_string()) {
        const auto s = j.at("kappa").get<std::string>();
        if (s == "inf" || s == "+inf") {
            c.kappa = std::numeric_limits<double>::infinity();
        } else if (s == "-inf") {
            c.kappa = -std::numeric_limits<double>::infinity();
        } else {
            throw ConfigError("policy config: kappa string must be 'inf' or '-inf'");
        }
    } else {
        c.kappa = detail::get_or(j, "kappa", c.kappa, w);
    }
    c.c_click = detail::get_or(j, "c_click", c.c_click, w);
    c.c_send = detail::get_or(j, "c_send", c.c_send, w);
    c.horizon_hours = detail::get_or(j, "horizon_T", c.horizon_hours, w);
    c.evaluation_cadence_hours = detail::get_or(j, "evaluation_cadence_hours", c.evaluation_cadence_hours, w);
    if (std::isnan(c.kappa)) {
        throw ConfigError("policy config: kappa is NaN");
    }
    if (!(c.horizon_hours > 0.0) || !(c.evaluation_cadence_hours > 0.0)) {
        throw ConfigError("policy config: horizon_T and evaluation_cadence_hours must be positive");
    }
    if (c.rule == PolicyRule::Moo) {
        MooConfig{c.c_click, c.c_send}.validate();
    }
    return c;
}

inline json to_json(const PolicyConfig& c)
{
    json kappa = std::isfinite(c.kappa) ? json(c.kappa) : json(c.kappa > 0 ? "inf" : "-inf");
    return {{"rule", to_string(c.rule)},
            {"kappa", kappa},
            {"c_click", c.c_click},
            {"c_send", c.c_send},
            {"horizon_T", c.horizon_hours},
            {"evaluation_cadence_hours", c.evaluation_cadence_hours}};
}

// ---------------------------------------------------------------- models

namespace detail {

inline json named(const FeatureSchema& s, const std::vector<double>& v)
{
    json out = json::object();
    const auto names = s.names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        out[names[i]] = v[i];
    }
    return out;
}

inline std::vector<double> unnamed(const FeatureSchema& s, const json& j, const char* what)
{
    if (!j.is_object()) {
        throw DataError(std::string("model: '") + what + "' must be an object keyed by slot name");
    }
    std::vector<double> out(s.size(), 0.0);
    std::vector<bool> seen(s.size(), false);
    for (const auto& [k, v] : j.items()) {
        auto idx = s.find(k);
        if (!idx) {
            throw DataError(std::string("model: ") + what + " names unknown slot '" + k + "'");
        }
        out[*idx] = v.get<double>();
        seen[*idx] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) {
            throw DataError(std::string("model: ") + what + " is missing slot '" + s.slots()[i].name + "'");
        }
    }
    return out;
}

inline json diagnostics_json(const FitDiagnostics& d)
{
    return {{"negloglik", d.negloglik},   {"grad_max_norm", d.grad_max_norm}, {"iterations", d.iterations},
            {"evaluations", d.evaluations}, {"converged", d.converged},       {"message", d.message},
            {"n_observations", d.n_observations}, {"n_positive", d.n_positive}, {"ridge", d.ridge}};
}

inline FitDiagnostics diagnostics_from_json(const json& j)
{
    FitDiagnostics d;
    if (!j.is_object()) {
        return d;
    }
    d.negloglik = j.value("negloglik", 0.0);
    d.grad_max_norm = j.value("grad_max_norm", 0.0);
    d.iterations = j.value("iterations", 0);
    d.evaluations = j.value("evaluations", 0);
    d.converged = j.value("converged", false);
    d.message = j.value("message", std::string());
    d.n_observations = j.value("n_observations", std::size_t{0});
    d.n_positive = j.value("n_positive", std::size_t{0});
    d.ridge = j.value("ridge", 0.0);
    return d;
}

inline json standardization_json(const FeatureSchema& s, const Standardization& st)
{
    return {{"mean", named(s, st.mean)}, {"scale", named(s, st.scale)}};
}

inline Standardization standardization_from_json(const FeatureSchema& s, const json& j)
{
    if (!j.is_object()) {
        return identity_standardization(s.size());
    }
    return {unnamed(s, j.at("mean"), "standardization.mean"), unnamed(s, j.at("scale"), "standardization.scale")};
}

inline void check_header(const json& j, const char* expected_type)
{
    const int version = j.value("format_version", -1);
    if (version != kModelFormatVersion) {
        throw DataError("model: unsupported format_version " + std::to_string(version));
    }
    const auto type = j.value("model_type", std::string());
    if (type != expected_type) {
        throw DataError("model: expected model_type '" + std::string(expected_type) + "', found '" + type + "'");
    }
}

} // namespace detail

inline json to_json(const WeibullAftModel& m)
{
    return {{"format_version", kModelFormatVersion},
            {"model_type", "weibull_aft"},
            {"model_version", model_version(m)},
            {"schema", to_json(m.schema)},
            {"coefficients", detail::named(m.schema, m.coefficients)},
            {"log_sigma", m.log_sigma},
            {"sigma", m.sigma()},
            {"alpha", m.alpha()},
            {"standardization", detail::standardization_json(m.schema, m.standardization)},
            {"diagnostics", detail::diagnostics_json(m.diagnostics)}};
}

inline WeibullAftModel aft_model_from_json(const json& j)
{
    detail::check_header(j, "weibull_aft");
    WeibullAftModel m;
    m.schema = schema_from_json(j.at("schema"));
    m.coefficients = detail::unnamed(m.schema, j.at("coefficients"), "coefficients");
    m.log_sigma = detail::require<double>(j, "log_sigma", "model");
    m.standardization = detail::standardization_from_json(m.schema, j.value("standardization", json()));
    m.diagnostics = detail::diagnostics_from_json(j.value("diagnostics", json()));
    m.validate();
    return m;
}

inline json to_json(const LogisticModel& m)
{
    return {{"format_version", kModelFormatVersion},
            {"model_type", "logistic"},
            {"schema", to_json(m.schema)},
            {"weights", detail::named(m.schema, m.weights)},
            {"horizon_hours", m.horizon_hours},
            {"standardization", detail::standardization_json(m.schema, m.standardization)},
            {"diagnostics", detail::diagnostics_json(m.diagnostics)}};
}

inline LogisticModel logistic_model_from_json(const json& j)
{
    detail::check_header(j, "logistic");
    LogisticModel m;
    m.schema = schema_from_json(j.at("schema"));
    m.weights = detail::unnamed(m.schema, j.at("weights"), "weights");
    m.horizon_hours = detail::require<double>(j, "horizon_hours", "model");
    m.standardization = detail::standardization_from_json(m.schema, j.value("standardization", json()));
    m.diagnostics = detail::diagnostics_from_json(j.value("diagnostics", json()));
    m.validate();
    return m;
}

// ---------------------------------------------------------------- scoring

struct ContextRow {
    std::string user_id;
    ScoringContext ctx;
    std::optional<double> p_click; // passed through to the decision step
};

/// Scoring input. Each line has user_id, w0_hours, optional horizon_T
/// (falls back to `default_horizon`), and either "x" (full vector in schema
/// order) or "features" + "badge_count" (+ optional state/activity values) from
/// which the vector is materialized.
inline std::vector<ContextRow> read_contexts_jsonl(std::istream& in, const FeatureSchema& schema,
                                                   double default_horizon)
{
    std::vector<ContextRow> out;
    detail::for_each_jsonl(in, "contexts", [&](const json& j, std::size_t n) {
        const std::string w = detail::where("contexts", n);
        ContextRow r;
        r.user_id = detail::require<std::string>(j, "user_id", w);
        r.ctx.w0_hours = detail::require<double>(j, "w0_hours", w);
        r.ctx.horizon_hours = detail::get_or<double, DataError>(j, "horizon_T", default_horizon, w);
        if (j.contains("x")) {
            r.ctx.features_now.values = detail::require<std::vector<double>>(j, "x", w);
            r.ctx.features_now.schema_id = schema.id();
            schema.check_vector(r.ctx.features_now);
            std::vector<double> check = r.ctx.features_now.values;
            schema.recompute_interactions(check);
            if (check != r.ctx.features_now.values) {
                throw DataError(w + ": interaction slots in 'x' do not equal the product of their parents");
            }
        } else {
            std::map<std::string, double> raw;
            if (j.contains("features")) {
                raw = detail::require<std::map<std::string, double>>(j, "features", w);
            }
            StateSnapshot st;
            st.badge_count = detail::get_or<double, DataError>(j, "badge_count", 0.0, w);
            st.state_age_hours = detail::get_or<double, DataError>(j, "state_age_hours", r.ctx.w0_hours, w);
            st.visits_past_week = detail::get_or<double, DataError>(j, "visits_past_week", 0.0, w);
            st.sends_past_week = detail::get_or<double, DataError>(j, "sends_past_week", 0.0, w);
            r.ctx.features_now = schema.materialize(raw, st);
        }
        if (j.contains("p_click")) {
            r.p_click = detail::require<double>(j, "p_click", w);
            if (!(*r.p_click >= 0.0 && *r.p_click <= 1.0)) {
                throw DataError(w + ": p_click must lie in [0, 1]");
            }
        }
        r.ctx.validate();
        out.push_back(std::move(r));
    });
    return out;
}

inline json score_row_json(const std::string& user_id, const ScoringContext& ctx, const DeltaEffectResult& r,
                           std::optional<double> p_click = std::nullopt)
{
    json j = {{"user_id", user_id}, {"w0_hours", ctx.w0_hours}, {"horizon_T", ctx.horizon_hours},
              {"delta", r.delta},     {"p_send", r.p_send},       {"p_wait", r.p_wait},
              {"lambda0", r.lambda0}, {"lambda1", r.lambda1},     {"alpha", r.alpha},
              {"mu0", r.mu0},         {"mu1", r.mu1}};
    if (p_click) {
        j["p_click"] = *p_click;
    }
    return j;
}

// ---------------------------------------------------------------- decisions

inline std::vector<Candidate> read_candidates_jsonl(std::istream& in, bool need_click)
{
    std::vector<Candidate> out;
    detail::for_each_jsonl(in, "candidates", [&](const json& j, std::size_t n) {
        const std::string w = detail::where("candidates", n);
        Candidate c;
        c.user_id = detail::require<std::string>(j, "user_id", w);
        c.delta = detail::require<double>(j, "delta", w);
        c.p_wait = detail::get_or<double, DataError>(j, "p_wait", 0.0, w);
        if (need_click) {
            c.p_click = detail::require<double>(j, "p_click", w);
        } else {
            c.p_click = detail::get_or<double, DataError>(j, "p_click", 0.0, w);
        }
        out.push_back(std::move(c));
    });
    return out;
}

inline json decision_json(const Decision& d, PolicyRule rule, const MooSolution* moo)
{
    json j = {{"user_id", d.user_id}, {"y", d.y}, {"send", d.send}, {"rule", to_string(rule)}};
    if (moo) {
        j["duals"] = {{"kappa1", moo->kappa1}, {"kappa2", moo->kappa2}};
    } else {
        j["duals"] = nullptr;
    }
    if (!d.flag.empty()) {
        j["flag"] = d.flag;
    }
    return j;
}

// ---------------------------------------------------------------- utilities

inline json parse_document(std::istream& in, const std::string& what)
{
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(what + ": " + e.what());
    }
}

} // namespace notifsurv::io
