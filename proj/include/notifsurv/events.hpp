#pragma once

#include "notifsurv/errors.hpp"
#include "notifsurv/schema.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace notifsurv {

enum class EventKind { NotificationSend, Visit };

struct Event {
    std::string user_id;
    double ts_hours = 0.0;
    EventKind kind = EventKind::NotificationSend;
    int badge_count = 0; // state after this event; meaningful on sends
    std::map<std::string, double> features;
};

inline constexpr double kHoursPerWeek = 168.0;

inline void validate_event(const Event& e)
{
    if (!std::isfinite(e.ts_hours)) {
        throw DataError("non-finite timestamp for user '" + e.user_id + "'");
    }
    if (e.badge_count < 0) {
        throw DataError("negative badge_count for user '" + e.user_id + "'");
    }
}

/// Orders one user's events by time; at equal timestamps visits precede
/// sends, otherwise input order is kept.
inline void sort_user_events(std::vector<Event>& events)
{
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
        if (a.ts_hours != b.ts_hours) {
            return a.ts_hours < b.ts_hours;
        }
        return a.kind == EventKind::Visit && b.kind == EventKind::NotificationSend;
    });
}

/// Groups events by user id (ordered map, so iteration is by user id) and
/// sorts each stream.
inline std::map<std::string, std::vector<Event>> group_by_user(const std::vector<Event>& events)
{
    std::map<std::string, std::vector<Event>> out;
    for (const auto& e : events) {
        validate_event(e);
        out[e.user_id].push_back(e);
    }
    for (auto& [_, stream] : out) {
        sort_user_events(stream);
    }
    return out;
}

/// Replays one user's sorted stream and snapshots state features at sends.
///
/// The state starts at the most recent visit or send, whichever is later.
class UserStateTracker {
public:
    /// State as seen just before `send` is applied.
    [[nodiscard]] StateSnapshot snapshot_at(const Event& send) const
    {
        StateSnapshot s;
        s.badge_count = send.badge_count;
        const double t = send.ts_hours;
        std::optional<double> start;
        if (last_visit_ && (!start || *last_visit_ > *start)) {
            start = last_visit_;
        }
        if (last_send_ && (!start || *last_send_ > *start)) {
            start = last_send_;
        }
        s.state_age_hours = start ? std::max(0.0, t - *start) : 0.0;
        s.visits_past_week = count_since(visits_, t - kHoursPerWeek);
        s.sends_past_week = count_since(sends_, t - kHoursPerWeek);
        return s;
    }

    void observe(const Event& e)
    {
        auto& q = e.kind == EventKind::Visit ? visits_ : sends_;
        q.push_back(e.ts_hours);
        while (!q.empty() && q.front() < e.ts_hours - kHoursPerWeek) {
            q.pop_front();
        }
        (e.kind == EventKind::Visit ? last_visit_ : last_send_) = e.ts_hours;
    }

private:
    static double count_since(const std::deque<double>& q, double from)
    {
        return static_cast<double>(std::count_if(q.begin(), q.end(), [from](double t) { return t >= from; }));
    }

    std::optional<double> last_visit_;
    std::optional<double> last_send_;
    std::deque<double> visits_;
    std::deque<double> sends_;
};

} // namespace notifsurv
