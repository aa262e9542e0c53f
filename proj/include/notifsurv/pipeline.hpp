#pragma once

// Event log -> censored survival observations.
//
// Each send that has a successor event yields one observation whose duration
// is the gap to that successor; it is uncensored iff the successor is a visit.

#include "notifsurv/detail/hash.hpp"
#include "notifsurv/errors.hpp"
#include "notifsurv/events.hpp"
#include "notifsurv/parallel.hpp"
#include "notifsurv/schema.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace notifsurv {

struct PipelineConfig {
    double duration_floor_hours = 1.0 / 3600.0;
    int max_notifications = 200; // per week
    int max_visits = 500;        // per week
    std::uint64_t split_seed = 0;
    // Sends outside [window_start, window_end) do not originate observations
    // but still act as successors and update state.
    double window_start = -std::numeric_limits<double>::infinity();
    double window_end = std::numeric_limits<double>::infinity();

    void validate() const
    {
        if (!(duration_floor_hours > 0.0) || !std::isfinite(duration_floor_hours)) {
            throw ConfigError("duration_floor_hours must be positive and finite");
        }
        if (max_notifications < 0 || max_visits < 0) {
            throw ConfigError("outlier limits must be non-negative");
        }
        if (!(window_start < window_end)) {
            throw ConfigError("window_start must be before window_end");
        }
    }
};

struct Observation {
    FeatureVector features;
    double duration = 0.0;
    bool uncensored = false;
    std::string user_id;
    double origin_timestamp = 0.0;
};

struct BuildStats {
    std::size_t sends = 0;
    std::size_t observations = 0;
    std::size_t uncensored = 0;
    std::size_t unresolved_sends = 0; // trailing sends with no successor
    std::size_t out_of_window_sends = 0;
    std::size_t clamped_durations = 0;
};

namespace detail {

inline std::vector<Observation> user_observations(const std::vector<Event>& stream, const FeatureSchema& schema,
                                                  const PipelineConfig& cfg, BuildStats& stats)
{
    std::vector<Observation> out;
    UserStateTracker tracker;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const Event& e = stream[i];
        if (e.kind == EventKind::NotificationSend) {
            ++stats.sends;
            if (e.ts_hours < cfg.window_start || e.ts_hours >= cfg.window_end) {
                ++stats.out_of_window_sends;
            } else if (i + 1 == stream.size()) {
                ++stats.unresolved_sends;
            } else {
                const Event& next = stream[i + 1];
                Observation o;
                o.features = schema.materialize(e.features, tracker.snapshot_at(e));
                double gap = next.ts_hours - e.ts_hours;
                if (gap < cfg.duration_floor_hours) {
                    gap = cfg.duration_floor_hours;
                    ++stats.clamped_durations;
                }
                o.duration = gap;
                o.uncensored = next.kind == EventKind::Visit;
                o.user_id = e.user_id;
                o.origin_timestamp = e.ts_hours;
                stats.uncensored += o.uncensored ? 1 : 0;
                out.push_back(std::move(o));
            }
        }
        tracker.observe(e);
    }
    stats.observations += out.size();
    return out;
}

} // namespace detail

/// Builds observations from an unsorted event log. Output is ordered by
/// (user_id, origin_timestamp) regardless of input order or thread count.
inline std::vector<Observation> build_observations(const std::vector<Event>& events, const FeatureSchema& schema,
                                                   const PipelineConfig& cfg, BuildStats* stats = nullptr,
                                                   unsigned threads = 1)
{
    cfg.validate();
    const auto grouped = group_by_user(events);
    std::vector<const std::vector<Event>*> streams;
    streams.reserve(grouped.size());
    for (const auto& [_, s] : grouped) {
        streams.push_back(&s);
    }
    std::vector<std::vector<Observation>> per_user(streams.size());
    std::vector<BuildStats> per_stats(streams.size());
    parallel_for(streams.size(), threads, [&](std::size_t u) {
        per_user[u] = detail::user_observations(*streams[u], schema, cfg, per_stats[u]);
    });
    std::vector<Observation> out;
    BuildStats total;
    for (std::size_t u = 0; u < streams.size(); ++u) {
        for (auto& o : per_user[u]) {
            out.push_back(std::move(o));
        }
        total.sends += per_stats[u].sends;
        total.observations += per_stats[u].observations;
        total.uncensored += per_stats[u].uncensored;
        total.unresolved_sends += per_stats[u].unresolved_sends;
        total.out_of_window_sends += per_stats[u].out_of_window_sends;
        total.clamped_durations += per_stats[u].clamped_durations;
    }
    if (stats) {
        *stats = total;
    }
    return out;
}

struct OutlierReport {
    std::size_t users_total = 0;
    std::size_t users_kept = 0;
    std::size_t users_over_notifications = 0;
    std::size_t users_over_visits = 0;
    std::vector<std::string> dropped_users;
};

struct FilteredEvents {
    std::vector<Event> events;
    OutlierReport report;
};

/// Drops every event of users whose busiest week exceeds either limit.
/// Weeks are 168 h buckets anchored at the window start (or the earliest
/// event when the window is unbounded).
inline FilteredEvents filter_outliers(const std::vector<Event>& events, const PipelineConfig& cfg)
{
    FilteredEvents out;
    if (events.empty()) {
        return out;
    }
    double anchor = cfg.window_start;
    if (!std::isfinite(anchor)) {
        anchor = std::numeric_limits<double>::infinity();
        for (const auto& e : events) {
            validate_event(e);
            anchor = std::min(anchor, e.ts_hours);
        }
    }
    std::map<std::string, std::map<long long, std::pair<int, int>>> weekly;
    for (const auto& e : events) {
        validate_event(e);
        const auto week = static_cast<long long>(std::floor((e.ts_hours - anchor) / kHoursPerWeek));
        auto& c = weekly[e.user_id][week];
        (e.kind == EventKind::NotificationSend ? c.first : c.second) += 1;
    }
    std::set<std::string> dropped;
    for (const auto& [user, weeks] : weekly) {
        int max_sends = 0;
        int max_visits = 0;
        for (const auto& [_, c] : weeks) {
            max_sends = std::max(max_sends, c.first);
            max_visits = std::max(max_visits, c.second);
        }
        const bool too_many_sends = max_sends > cfg.max_notifications;
        const bool too_many_visits = max_visits > cfg.max_visits;
        out.report.users_over_notifications += too_many_sends ? 1 : 0;
        out.report.users_over_visits += too_many_visits ? 1 : 0;
        if (too_many_sends || too_many_visits) {
            dropped.insert(user);
        }
    }
    out.report.users_total = weekly.size();
    out.report.users_kept = weekly.size() - dropped.size();
    out.report.dropped_users.assign(dropped.begin(), dropped.end());
    for (const auto& e : events) {
        if (!dropped.contains(e.user_id)) {
            out.events.push_back(e);
        }
    }
    return out;
}

struct SplitDataset {
    std::vector<Observation> train;
    std::vector<Observation> test;
    std::uint64_t seed = 0;
};

/// Per-user 4:1 split. Users are ordered by a hash keyed on (user_id, seed)
/// and the first round(n_users / 5) go to test, so a user never straddles the
/// split and reruns are identical.
inline SplitDataset split(const std::vector<Observation>& obs, std::uint64_t seed)
{
    SplitDataset out;
    out.seed = seed;
    std::set<std::string> users;
    for (const auto& o : obs) {
        users.insert(o.user_id);
    }
    std::vector<std::pair<std::uint64_t, std::string>> keyed;
    keyed.reserve(users.size());
    for (const auto& u : users) {
        keyed.emplace_back(detail::keyed_hash(u, seed), u);
    }
    std::sort(keyed.begin(), keyed.end());
    const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(keyed.size()) / 5.0));
    std::set<std::string> test_users;
    for (std::size_t i = 0; i < n_test; ++i) {
        test_users.insert(keyed[i].second);
    }
    for (const auto& o : obs) {
        (test_users.contains(o.user_id) ? out.test : out.train).push_back(o);
    }
    return out;
}

} // namespace notifsurv
