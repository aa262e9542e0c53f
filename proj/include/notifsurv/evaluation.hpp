#pragma once

// Offline evaluation: per-horizon labeling, rank AUC, and the AUC-vs-horizon
// comparison of the AFT model against per-horizon logistic baselines.

#include "notifsurv/aft.hpp"
#include "notifsurv/errors.hpp"
#include "notifsurv/events.hpp"
#include "notifsurv/logistic.hpp"
#include "notifsurv/pipeline.hpp"
#include "notifsurv/survival.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace notifsurv {

enum class Labeler { Naive, CensoringClean };

inline std::string_view to_string(Labeler l) { return l == Labeler::Naive ? "naive" : "censoring_clean"; }

inline Labeler labeler_from_string(std::string_view s)
{
    if (s == "naive") {
        return Labeler::Naive;
    }
    if (s == "censoring_clean" || s == "clean") {
        return Labeler::CensoringClean;
    }
    throw ConfigError("unknown labeler '" + std::string(s) + "'");
}

enum class Label { Negative, Positive, Ambiguous };

/// Per-user sorted visit times, for labeling sends against the full timeline.
class VisitIndex {
public:
    explicit VisitIndex(const std::vector<Event>& events)
    {
        for (const auto& e : events) {
            if (e.kind == EventKind::Visit) {
                visits_[e.user_id].push_back(e.ts_hours);
            }
        }
        for (auto& [_, v] : visits_) {
            std::sort(v.begin(), v.end());
        }
    }

    /// True iff the user has a visit in (from, to].
    [[nodiscard]] bool any_visit(const std::string& user, double from, double to) const
    {
        auto it = visits_.find(user);
        if (it == visits_.end()) {
            return false;
        }
        auto v = std::upper_bound(it->second.begin(), it->second.end(), from);
        return v != it->second.end() && *v <= to;
    }

private:
    std::map<std::string, std::vector<double>> visits_;
};

/// label = some visit in (send, send + horizon], ignoring any sends in between.
inline std::vector<bool> label_naive(const VisitIndex& visits, const std::vector<Observation>& obs, double horizon)
{
    std::vector<bool> out;
    out.reserve(obs.size());
    for (const auto& o : obs) {
        out.push_back(visits.any_visit(o.user_id, o.origin_timestamp, o.origin_timestamp + horizon));
    }
    return out;
}

inline std::vector<bool> label_naive(const std::vector<Event>& events, const std::vector<Observation>& obs,
                                     double horizon)
{
    return label_naive(VisitIndex(events), obs, horizon);
}

/// Positive: visit observed within the horizon. Negative: no visit up to the
/// horizon (the observation lasts at least that long). Ambiguous: censored
/// before the horizon.
inline std::vector<Label> label_censoring_clean(const std::vector<Observation>& obs, double horizon)
{
    std::vector<Label> out;
    out.reserve(obs.size());
    for (const auto& o : obs) {
        if (o.uncensored && o.duration <= horizon) {
            out.push_back(Label::Positive);
        } else if (o.duration >= horizon) {
            out.push_back(Label::Negative);
        } else {
            out.push_back(Label::Ambiguous);
        }
    }
    return out;
}

/// AFT ranking score: F(horizon; lambda(x), alpha).
inline double score_for_auc(const WeibullAftModel& model, std::span<const double> x, double horizon)
{
    return weibull_cdf(horizon, model.weibull(x));
}

/// Logistic ranking score; the model must have been trained for `horizon`.
inline double score_for_auc(const LogisticModel& model, std::span<const double> x, double horizon)
{
    if (std::abs(model.horizon_hours - horizon) > 1e-9 * std::max(1.0, horizon)) {
        throw ConfigError("logistic model trained for horizon " + std::to_string(model.horizon_hours)
                          + " h cannot score horizon " + std::to_string(horizon) + " h");
    }
    return model.predict(x);
}

/// Mann-Whitney AUC with tied scores counted one half.
inline double auc(std::span<const double> scores, const std::vector<bool>& labels)
{
    if (scores.size() != labels.size()) {
        throw DataError("auc: score and label counts differ");
    }
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) {
                rank_sum_pos += avg_rank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw DataError("auc needs both classes; got " + std::to_string(n_pos) + " positives and "
                        + std::to_string(n_neg) + " negatives");
    }
    const double np = static_cast<double>(n_pos);
    const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

struct AucRow {
    double t_hours = 0.0;
    double auc_aft = std::numeric_limits<double>::quiet_NaN();
    double auc_logistic = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
    std::size_t n_ambiguous = 0;
    Labeler labeler = Labeler::Naive;
    bool insufficient_data = false;
};

struct AucReport {
    std::vector<AucRow> rows;
};

/// Published offline AUC reference points (hours, AFT, logistic); reported as
/// context only, never compared against.
struct ReferencePoint {
    double t_hours;
    double auc_aft;
    double auc_logistic; // NaN when not reported
};

inline std::vector<ReferencePoint> reference_points()
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    return {{4.0, 0.74, 0.58}, {24.0, 0.85, 0.73}, {48.0, 0.89, nan}};
}

inline std::vector<double> default_horizons() { return {2, 4, 8, 12, 24, 36, 48}; }

/// One row per (horizon, labeler). One AFT model serves every horizon; each
/// horizon needs its own logistic model (keyed by its training horizon).
/// `events` supplies the timeline for the naive labeler.
inline AucReport auc_vs_horizon(const WeibullAftModel& aft, const std::vector<LogisticModel>& logistic,
                                const std::vector<Observation>& test, const std::vector<Event>& events,
                                const std::vector<double>& horizons, const std::vector<Labeler>& labelers)
{
    std::map<double, const LogisticModel*> by_horizon;
    for (const auto& m : logistic) {
        by_horizon[m.horizon_hours] = &m;
    }
    auto find_model = [&](double t) -> const LogisticModel& {
        for (const auto& [h, m] : by_horizon) {
            if (std::abs(h - t) <= 1e-9 * std::max(1.0, t)) {
                return *m;
            }
        }
        throw ConfigError("no logistic model for horizon " + std::to_string(t) + " h");
    };
    for (double t : horizons) {
        if (!(t > 0.0)) {
            throw ConfigError("horizons must be positive");
        }
        find_model(t);
    }

    std::set<std::string> users;
    for (const auto& o : test) {
        users.insert(o.user_id);
    }
    const VisitIndex visits(events);

    AucReport report;
    for (double t : horizons) {
        const LogisticModel& lm = find_model(t);
        for (Labeler mode : labelers) {
            AucRow row;
            row.t_hours = t;
            row.labeler = mode;
            std::vector<std::size_t> idx;
            std::vector<bool> labels;
            if (mode == Labeler::Naive) {
                labels = label_naive(visits, test, t);
                idx.resize(test.size());
                std::iota(idx.begin(), idx.end(), std::size_t{0});
            } else {
                const auto clean = label_censoring_clean(test, t);
                for (std::size_t i = 0; i < clean.size(); ++i) {
                    if (clean[i] == Label::Ambiguous) {
                        ++row.n_ambiguous;
                    } else {
                        idx.push_back(i);
                        labels.push_back(clean[i] == Label::Positive);
                    }
                }
            }
            row.n = idx.size();
            const auto positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), true));
            if (users.size() < 2 || positives == 0 || positives == labels.size()) {
                row.insufficient_data = true;
                report.rows.push_back(row);
                continue;
            }
            std::vector<double> s_aft;
            std::vector<double> s_log;
            s_aft.reserve(idx.size());
            s_log.reserve(idx.size());
            for (std::size_t i : idx) {
                s_aft.push_back(score_for_auc(aft, test[i].features.values, t));
                s_log.push_back(score_for_auc(lm, test[i].features.values, t));
            }
            row.auc_aft = auc(s_aft, labels);
            row.auc_logistic = auc(s_log, labels);
            report.rows.push_back(row);
        }
    }
    return report;
}

inline std::string format_auc(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// CSV with header t_hours,auc_aft,auc_logistic,n,n_ambiguous,labeler.
/// Insufficient-data rows carry nan AUCs.
inline std::string to_csv(const AucReport& r)
{
    std::string out = "t_hours,auc_aft,auc_logistic,n,n_ambiguous,labeler\n";
    char buf[64];
    for (const auto& row : r.rows) {
        std::snprintf(buf, sizeof buf, "%g", row.t_hours);
        out += buf;
        out += ',' + format_auc(row.auc_aft) + ',' + format_auc(row.auc_logistic) + ',' + std::to_string(row.n) + ','
               + std::to_string(row.n_ambiguous) + ',' + std::string(to_string(row.labeler)) + '\n';
    }
    return out;
}

/// Fixed-width text table for terminals.
inline std::string to_text_table(const AucReport& r)
{
    std::string out = "   T(h)  AUC(AFT)  AUC(logit)       n   ambig  labeler\n";
    char buf[160];
    for (const auto& row : r.rows) {
        std::snprintf(buf, sizeof buf, "%7g  %8s  %10s  %6zu  %6zu  %s%s\n", row.t_hours,
                      format_auc(row.auc_aft).c_str(), format_auc(row.auc_logistic).c_str(), row.n, row.n_ambiguous,
                      std::string(to_string(row.labeler)).c_str(), row.insufficient_data ? " (insufficient data)" : "");
        out += buf;
    }
    return out;
}

} // namespace notifsurv
