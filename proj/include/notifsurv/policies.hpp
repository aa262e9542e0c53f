#pragma once

// Send/hold decision rules: global delta threshold, personalized ratio, and
// the two-constraint multi-objective LP solved through its duals.

#include "notifsurv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace notifsurv {

struct Candidate {
    std::string user_id;
    double delta = 0.0;   // delta effect of sending now
    double p_wait = 0.0;  // visit probability if we hold
    double p_click = 0.0; // externally predicted click probability if sent
};

struct Decision {
    std::string user_id;
    double y = 0.0; // LP value in [0, 1]; 0/1 for the threshold rules
    bool send = false;
    std::string flag; // e.g. "p_wait_zero", "fractional_rounded"
};

struct MooConfig {
    double c_click = 0.0; // minimum expected clicks
    double c_send = 0.0;  // maximum sends

    void validate() const
    {
        if (!(c_click >= 0.0) || !(c_send >= 0.0) || !std::isfinite(c_click) || !std::isfinite(c_send)) {
            throw ConfigError("c_click and c_send must be finite and non-negative");
        }
    }
};

struct MooSolution {
    bool feasible = true;
    std::string message;
    std::vector<double> y;
    double objective = 0.0;
    double kappa1 = 0.0; // dual of the click constraint
    double kappa2 = 0.0; // dual of the send-volume constraint
    double clicks = 0.0;
    double sends = 0.0;
};

inline void validate_candidates(const std::vector<Candidate>& cs, bool need_click)
{
    auto prob = [](double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; };
    for (const auto& c : cs) {
        if (!std::isfinite(c.delta)) {
            throw DataError("candidate '" + c.user_id + "' has a non-finite delta");
        }
        if (!prob(c.p_wait)) {
            throw DataError("candidate '" + c.user_id + "' has p_wait outside [0,1]");
        }
        if (need_click && !prob(c.p_click)) {
            throw DataError("candidate '" + c.user_id + "' has p_click outside [0,1]");
        }
    }
}

/// send <=> delta > kappa (strict).
inline std::vector<Decision> threshold_rule(const std::vector<Candidate>& cs, double kappa)
{
    validate_candidates(cs, false);
    std::vector<Decision> out;
    out.reserve(cs.size());
    for (const auto& c : cs) {
        const bool send = c.delta > kappa;
        out.push_back({c.user_id, send ? 1.0 : 0.0, send, {}});
    }
    return out;
}

/// send <=> delta / p_wait > kappa. With p_wait = 0 the ratio is taken at its
/// limit (+inf for positive delta, -inf otherwise) and the decision is flagged.
inline std::vector<Decision> ratio_rule(const std::vector<Candidate>& cs, double kappa)
{
    validate_candidates(cs, false);
    std::vector<Decision> out;
    out.reserve(cs.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (const auto& c : cs) {
        Decision d{c.user_id, 0.0, false, {}};
        double ratio;
        if (c.p_wait == 0.0) {
            ratio = c.delta > 0.0 ? inf : -inf;
            d.flag = "p_wait_zero";
        } else {
            ratio = c.delta / c.p_wait;
        }
        d.send = ratio > kappa;
        d.y = d.send ? 1.0 : 0.0;
        out.push_back(std::move(d));
    }
    return out;
}

namespace detail {

class MooGreedy {
public:
    MooGreedy(const std::vector<Candidate>& cs, const MooConfig& cfg) : cs_(cs), cfg_(cfg), by_user_(cs.size())
    {
        std::iota(by_user_.begin(), by_user_.end(), std::size_t{0});
        std::stable_sort(by_user_.begin(), by_user_.end(),
                         [&](std::size_t a, std::size_t b) { return cs_[a].user_id < cs_[b].user_id; });
        rank_.resize(cs.size());
        for (std::size_t r = 0; r < by_user_.size(); ++r) {
            rank_[by_user_[r]] = r;
        }
    }

    /// Lagrangian maximizer for a fixed click multiplier: take the best
    /// positive scores delta + k1 * p_click until the send budget runs out.
    std::vector<double> solve(double k1) const
    {
        std::vector<double> score(cs_.size());
        for (std::size_t i = 0; i < cs_.size(); ++i) {
            score[i] = cs_[i].delta + k1 * cs_[i].p_click;
        }
        return fill(score);
    }

    /// Most clicks achievable within the send budget.
    std::vector<double> max_clicks() const
    {
        std::vector<double> score(cs_.size());
        for (std::size_t i = 0; i < cs_.size(); ++i) {
            score[i] = cs_[i].p_click;
        }
        return fill(score, /*allow_nonpositive=*/true);
    }

    double clicks(const std::vector<double>& y) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            s += cs_[i].p_click * y[i];
        }
        return s;
    }

private:
    std::vector<double> fill(const std::vector<double>& score, bool allow_nonpositive = false) const
    {
        std::vector<std::size_t> order(by_user_);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (score[a] != score[b]) {
                return score[a] > score[b];
            }
            return rank_[a] < rank_[b];
        });
        std::vector<double> y(cs_.size(), 0.0);
        double budget = cfg_.c_send;
        for (std::size_t i : order) {
            if (budget <= 0.0 || (!allow_nonpositive && score[i] <= 0.0)) {
                break;
            }
            y[i] = std::min(1.0, budget);
            budget -= y[i];
        }
        return y;
    }

    const std::vector<Candidate>& cs_;
    MooConfig cfg_;
    std::vector<std::size_t> by_user_;
    std::vector<std::size_t> rank_;
};

inline bool is_fractional(double v) noexcept { return v > 1e-12 && v < 1.0 - 1e-12; }

// Moves along directions that keep both constraint sums fixed and do not
// lower the objective until at most two entries are fractional.
inline void purify(std::vector<double>& y, const std::vector<Candidate>& cs)
{
    for (;;) {
        std::vector<std::size_t> frac;
        for (std::size_t i = 0; i < y.size() && frac.size() < 3; ++i) {
            if (is_fractional(y[i])) {
                frac.push_back(i);
            }
        }
        if (frac.size() < 3) {
            break;
        }
        const double pa = cs[frac[0]].p_click;
        const double pb = cs[frac[1]].p_click;
        const double pc = cs[frac[2]].p_click;
        // (1,1,1) x (pa,pb,pc): orthogonal to both constraint rows.
        double d[3] = {pc - pb, pa - pc, pb - pa};
        if (std::abs(d[0]) + std::abs(d[1]) + std::abs(d[2]) < 1e-15) {
            d[0] = 1.0;
            d[1] = -1.0;
            d[2] = 0.0;
        }
        double gain = 0.0;
        for (int k = 0; k < 3; ++k) {
            gain += cs[frac[k]].delta * d[k];
        }
        if (gain < 0.0) {
            for (double& v : d) {
                v = -v;
            }
        }
        double t = std::numeric_limits<double>::infinity();
        for (int k = 0; k < 3; ++k) {
            const double v = y[frac[k]];
            if (d[k] > 0.0) {
                t = std::min(t, (1.0 - v) / d[k]);
            } else if (d[k] < 0.0) {
                t = std::min(t, v / -d[k]);
            }
        }
        for (int k = 0; k < 3; ++k) {
            double& v = y[frac[k]];
            v += t * d[k];
            if (v < 1e-12) {
                v = 0.0;
            } else if (v > 1.0 - 1e-12) {
                v = 1.0;
            }
        }
    }
    for (double& v : y) {
        v = std::clamp(v, 0.0, 1.0);
        if (v < 1e-12) {
            v = 0.0;
        } else if (v > 1.0 - 1e-12) {
            v = 1.0;
        }
    }
}

} // namespace detail

/// Dual objective C_send*k2 - C_click*k1 + sum max(0, delta + k1*p_click - k2).
/// Equals the primal optimum at the returned duals.
inline double moo_dual_objective(const std::vector<Candidate>& cs, const MooConfig& cfg, double kappa1, double kappa2)
{
    double v = cfg.c_send * kappa2 - cfg.c_click * kappa1;
    for (const auto& c : cs) {
        v += std::max(0.0, c.delta + kappa1 * c.p_click - kappa2);
    }
    return v;
}

/// maximize sum delta_i y_i  s.t.  sum p_click_i y_i >= c_click,
/// sum y_i <= c_send, 0 <= y_i <= 1.
///
/// The click multiplier kappa1 is found by bisection on the Lagrangian
/// maximizer, whose click total is non-decreasing in kappa1. At the breakpoint
/// the two neighbouring maximizers are mixed so the click constraint holds with
/// equality, then the mix is reduced to at most two fractional entries.
inline MooSolution moo_solve(const std::vector<Candidate>& cs, const MooConfig& cfg)
{
    cfg.validate();
    validate_candidates(cs, true);
    MooSolution sol;
    sol.y.assign(cs.size(), 0.0);
    const detail::MooGreedy greedy(cs, cfg);

    const double click_tol = 1e-12 * std::max(1.0, cfg.c_click);
    const double best_clicks = greedy.clicks(greedy.max_clicks());
    if (best_clicks < cfg.c_click - click_tol) {
        sol.feasible = false;
        sol.message = "infeasible: at most " + std::to_string(best_clicks) + " expected clicks within "
                      + std::to_string(cfg.c_send) + " sends, need " + std::to_string(cfg.c_click);
        return sol;
    }

    auto y0 = greedy.solve(0.0);
    if (greedy.clicks(y0) >= cfg.c_click - click_tol) {
        sol.y = std::move(y0);
        sol.kappa1 = 0.0;
    } else {
        double lo = 0.0;
        double hi = 1.0;
        while (greedy.clicks(greedy.solve(hi)) < cfg.c_click - click_tol && hi < 1e30) {
            lo = hi;
            hi *= 2.0;
        }
        for (int it = 0; it < 400; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) {
                break;
            }
            (greedy.clicks(greedy.solve(mid)) >= cfg.c_click - click_tol ? hi : lo) = mid;
        }
        const auto y_lo = greedy.solve(lo);
        const auto y_hi = greedy.solve(hi);
        const double c_lo = greedy.clicks(y_lo);
        const double c_hi = greedy.clicks(y_hi);
        double theta = 0.0; // weight on y_lo
        if (c_hi > c_lo) {
            theta = std::clamp((c_hi - cfg.c_click) / (c_hi - c_lo), 0.0, 1.0);
        }
        for (std::size_t i = 0; i < cs.size(); ++i) {
            sol.y[i] = theta * y_lo[i] + (1.0 - theta) * y_hi[i];
        }
        sol.kappa1 = hi;
    }
    detail::purify(sol.y, cs);

    for (std::size_t i = 0; i < cs.size(); ++i) {
        sol.objective += cs[i].delta * sol.y[i];
        sol.clicks += cs[i].p_click * sol.y[i];
        sol.sends += sol.y[i];
    }
    // Volume dual: zero when the budget is slack, otherwise the best score
    // left (partly) unsent.
    sol.kappa2 = 0.0;
    if (sol.sends >= cfg.c_send - 1e-9) {
        for (std::size_t i = 0; i < cs.size(); ++i) {
            if (sol.y[i] < 1.0) {
                sol.kappa2 = std::max(sol.kappa2, cs[i].delta + sol.kappa1 * cs[i].p_click);
            }
        }
    }
    sol.message = "optimal";
    return sol;
}

/// Integer decisions from an LP solution. Entries at 0/1 are kept; fractional
/// entries are sent in descending delta order while whole sends remain in the
/// budget, and flagged.
inline std::vector<Decision> round_moo(const std::vector<Candidate>& cs, const MooSolution& sol, const MooConfig& cfg)
{
    std::vector<Decision> out(cs.size());
    double used = 0.0;
    std::vector<std::size_t> frac;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        out[i].user_id = cs[i].user_id;
        out[i].y = sol.feasible ? sol.y[i] : 0.0;
        if (!sol.feasible) {
            out[i].flag = "infeasible";
        } else if (sol.y[i] == 1.0) {
            out[i].send = true;
            used += 1.0;
        } else if (sol.y[i] > 0.0) {
            frac.push_back(i);
        }
    }
    std::stable_sort(frac.begin(), frac.end(), [&](std::size_t a, std::size_t b) {
        if (cs[a].delta != cs[b].delta) {
            return cs[a].delta > cs[b].delta;
        }
        return cs[a].user_id < cs[b].user_id;
    });
    for (std::size_t i : frac) {
        out[i].flag = "fractional_rounded";
        if (used + 1.0 <= std::floor(cfg.c_send + 1e-9)) {
            out[i].send = true;
            used += 1.0;
        }
    }
    return out;
}

} // namespace notifsurv
