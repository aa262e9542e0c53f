#pragma once

// Synthetic users and event streams drawn from a known Weibull AFT process.
//
// After every send the user's time-to-visit is redrawn from the law of the new
// state; the draw only materializes as a visit if it lands before the next
// send, which yields right-censoring the same way real logs do.

#include "notifsurv/detail/hash.hpp"
#include "notifsurv/errors.hpp"
#include "notifsurv/events.hpp"
#include "notifsurv/parallel.hpp"
#include "notifsurv/schema.hpp"
#include "notifsurv/survival.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace notifsurv {

enum class SendProcessKind { FixedInterval, Poisson };

struct SendProcess {
    SendProcessKind kind = SendProcessKind::FixedInterval;
    double interval_hours = 12.0; // fixed-interval gap
    double rate_per_hour = 1.0 / 12.0; // Poisson rate

    void validate() const
    {
        if (kind == SendProcessKind::FixedInterval && !(interval_hours > 0.0 && std::isfinite(interval_hours))) {
            throw ConfigError("send_process.interval_hours must be positive");
        }
        if (kind == SendProcessKind::Poisson && !(rate_per_hour > 0.0 && std::isfinite(rate_per_hour))) {
            throw ConfigError("send_process.rate_per_hour must be positive");
        }
    }
};

struct SimConfig {
    int n_users = 100;
    int n_features = 4; // static standard-normal profile slots p1..pn
    bool with_interaction = true; // badge_count * p1
    std::vector<double> true_coefficients; // schema order
    double true_sigma = 1.5;
    SendProcess send_process;
    double window_hours = 168.0;
    std::uint64_t seed = 1;
    // Emit the event that resolves the last in-window send even when it falls
    // past the window, so no in-window send is left unresolved.
    bool resolve_last_send = true;

    [[nodiscard]] std::vector<std::string> profile_names() const
    {
        std::vector<std::string> out;
        for (int k = 1; k <= n_features; ++k) {
            out.push_back("p" + std::to_string(k));
        }
        return out;
    }

    [[nodiscard]] FeatureSchema schema() const { return FeatureSchema::standard(profile_names(), with_interaction); }

    void validate() const
    {
        if (n_users < 0 || n_features < 0) {
            throw ConfigError("n_users and n_features must be non-negative");
        }
        if (!(true_sigma > 0.0) || !std::isfinite(true_sigma)) {
            throw ConfigError("true_sigma must be positive");
        }
        if (!(window_hours > 0.0) || !std::isfinite(window_hours)) {
            throw ConfigError("window_hours must be positive");
        }
        if (true_coefficients.size() != schema().size()) {
            throw ConfigError("true_coefficients has " + std::to_string(true_coefficients.size())
                              + " entries; the schema has " + std::to_string(schema().size()) + " slots");
        }
        for (double c : true_coefficients) {
            if (!std::isfinite(c)) {
                throw ConfigError("true_coefficients must be finite");
            }
        }
        send_process.validate();
    }
};

/// exp(mu + sigma * eps) with eps = log(-log(1 - u)), the inverse CDF of the
/// standard extreme-value law.
inline double time_to_visit_from_uniform(double mu, double sigma, double u)
{
    if (!(u > 0.0 && u < 1.0)) {
        throw std::domain_error("uniform draw must lie in (0, 1)");
    }
    const double eps = std::log(-std::log1p(-u));
    return std::exp(mu + sigma * eps);
}

inline double open_unit_draw(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u;
    do {
        u = unif(rng);
    } while (u <= 0.0);
    return u;
}

/// One draw of the time to visit for features x under the configured truth.
inline double sample_time_to_visit(std::span<const double> x, const SimConfig& cfg, std::mt19937_64& rng)
{
    if (x.size() != cfg.true_coefficients.size()) {
        throw DataError("feature vector does not match the simulator's coefficients");
    }
    return time_to_visit_from_uniform(dot(cfg.true_coefficients, x), cfg.true_sigma, open_unit_draw(rng));
}

inline std::mt19937_64 user_rng(const std::string& user_id, std::uint64_t seed)
{
    return std::mt19937_64(detail::keyed_hash(user_id, seed));
}

struct UserTruth {
    std::string user_id;
    std::map<std::string, double> profile;
    std::size_t sends = 0;    // in-window sends
    std::size_t visits = 0;   // visits resolving an in-window send
    std::size_t censored = 0; // in-window sends superseded by the next send
};

struct SimOutput {
    std::vector<Event> events; // grouped by user, time-ordered
    std::vector<UserTruth> users;

    [[nodiscard]] double censoring_rate() const
    {
        std::size_t s = 0;
        std::size_t c = 0;
        for (const auto& u : users) {
            s += u.sends;
            c += u.censored;
        }
        return s == 0 ? 0.0 : static_cast<double>(c) / static_cast<double>(s);
    }
};

inline std::string sim_user_id(int index, int n_users)
{
    int width = 1;
    for (int n = std::max(1, n_users - 1); n >= 10; n /= 10) {
        ++width;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "u%0*d", width, index);
    return buf;
}

namespace detail {

inline void simulate_user(const SimConfig& cfg, const FeatureSchema& schema, const std::string& user_id,
                          std::vector<Event>& events, UserTruth& truth)
{
    auto rng = user_rng(user_id, cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    truth.user_id = user_id;
    for (const auto& name : cfg.profile_names()) {
        truth.profile[name] = normal(rng);
    }

    const auto& sp = cfg.send_process;
    auto next_gap = [&]() {
        if (sp.kind == SendProcessKind::FixedInterval) {
            return sp.interval_hours;
        }
        return std::exponential_distribution<double>(sp.rate_per_hour)(rng);
    };
    double t_send = sp.kind == SendProcessKind::FixedInterval ? sp.interval_hours * open_unit_draw(rng) : next_gap();

    UserStateTracker tracker;
    int badge = 0;
    while (t_send < cfg.window_hours) {
        ++badge;
        Event send{user_id, t_send, EventKind::NotificationSend, badge, truth.profile};
        const FeatureVector x = schema.materialize(send.features, tracker.snapshot_at(send));
        tracker.observe(send);
        events.push_back(send);
        ++truth.sends;

        const double ttv = sample_time_to_visit(x.values, cfg, rng);
        const double t_next = t_send + next_gap();
        const bool last = t_next >= cfg.window_hours;
        if (t_send + ttv < t_next) {
            ++truth.visits;
            if (!last || cfg.resolve_last_send || t_send + ttv < cfg.window_hours) {
                Event visit{user_id, t_send + ttv, EventKind::Visit, 0, {}};
                tracker.observe(visit);
                events.push_back(std::move(visit));
                badge = 0;
            }
        } else {
            ++truth.censored;
            if (last && cfg.resolve_last_send) {
                events.push_back({user_id, t_next, EventKind::NotificationSend, badge + 1, truth.profile});
            }
        }
        t_send = t_next;
    }
}

} // namespace detail

/// Simulates every user on an independent random substream keyed by
/// (seed, user_id), so the output does not depend on `threads`.
inline SimOutput generate_event_log(const SimConfig& cfg, unsigned threads = 1)
{
    cfg.validate();
    const FeatureSchema schema = cfg.schema();
    const auto n = static_cast<std::size_t>(cfg.n_users);
    std::vector<std::vector<Event>> per_user(n);
    SimOutput out;
    out.users.resize(n);
    parallel_for(n, threads, [&](std::size_t u) {
        detail::simulate_user(cfg, schema, sim_user_id(static_cast<int>(u), cfg.n_users), per_user[u], out.users[u]);
    });
    for (auto& evs : per_user) {
        for (auto& e : evs) {
            out.events.push_back(std::move(e));
        }
    }
    return out;
}

/// Probability that a send is censored under a fixed-interval process when
/// the visit law does not depend on state: survival at the interval.
inline double analytic_censoring_probability(const SimConfig& cfg, std::span<const double> x)
{
    const double mu = dot(cfg.true_coefficients, x);
    const WeibullParams p{std::exp(-mu / cfg.true_sigma), 1.0 / cfg.true_sigma};
    return weibull_sf(cfg.send_process.interval_hours, p);
}

} // namespace notifsurv
