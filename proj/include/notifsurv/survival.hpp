#pragma once

// Weibull / standard extreme-value distribution functions and the
// send-versus-wait visit probabilities built on them.
//
// Time is measured in hours throughout. Survival quantities are carried as
// cumulative hazards (lambda * t^alpha) and exponentiated last.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace notifsurv {

/// Weibull law F(t) = 1 - exp(-lambda * t^alpha).
struct WeibullParams {
    double lambda = 1.0;
    double alpha = 1.0;

    [[nodiscard]] bool valid() const noexcept
    {
        return std::isfinite(lambda) && std::isfinite(alpha) && lambda > 0.0 && alpha > 0.0;
    }
};

/// Distributions before (pre) and after (post) a send, plus the time already
/// spent in the pre-send state.
struct StatePair {
    WeibullParams pre;
    WeibullParams post;
    double elapsed_w0 = 0.0;
};

struct LogDensitySurvival {
    double log_pdf;
    double log_sf;
};

struct VisitProbabilities {
    double p_send;
    double p_wait;
    double delta;
};

namespace detail {

inline void require_params(const WeibullParams& p, const char* fn)
{
    if (!p.valid()) {
        throw std::domain_error(std::string(fn) + ": Weibull parameters must be positive and finite (lambda="
                                + std::to_string(p.lambda) + ", alpha=" + std::to_string(p.alpha) + ")");
    }
}

inline void require_nonnegative(double t, const char* fn, const char* what)
{
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw std::domain_error(std::string(fn) + ": " + what + " must be finite and >= 0, got "
                                + std::to_string(t));
    }
}

inline void require_positive(double t, const char* fn, const char* what)
{
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw std::domain_error(std::string(fn) + ": " + what + " must be finite and > 0, got "
                                + std::to_string(t));
    }
}

/// lambda * t^alpha, evaluated through logs so large arguments saturate to
/// +inf instead of producing NaN.
inline double cumulative_hazard(double t, const WeibullParams& p) noexcept
{
    if (t == 0.0) {
        return 0.0;
    }
    return std::exp(std::log(p.lambda) + p.alpha * std::log(t));
}

/// lambda * ((t + w)^alpha - w^alpha) without cancellation for large w.
inline double conditional_hazard(double t, double w, const WeibullParams& p) noexcept
{
    if (w == 0.0) {
        return cumulative_hazard(t, p);
    }
    // w^a * ((1 + t/w)^a - 1)
    const double growth = std::expm1(p.alpha * std::log1p(t / w));
    return std::exp(std::log(p.lambda) + p.alpha * std::log(w)) * growth;
}

} // namespace detail

/// log(1 - F(t)) = -lambda t^alpha.
inline double weibull_log_sf(double t, const WeibullParams& p)
{
    detail::require_params(p, "weibull_log_sf");
    detail::require_nonnegative(t, "weibull_log_sf", "t");
    return -detail::cumulative_hazard(t, p);
}

inline double weibull_sf(double t, const WeibullParams& p)
{
    return std::exp(weibull_log_sf(t, p));
}

inline double weibull_cdf(double t, const WeibullParams& p)
{
    return -std::expm1(weibull_log_sf(t, p));
}

/// Density alpha lambda t^(alpha-1) exp(-lambda t^alpha).
///
/// At t = 0 the density is lambda when alpha = 1, zero when alpha > 1, and the
/// boundary value +infinity when alpha < 1.
inline double weibull_pdf(double t, const WeibullParams& p)
{
    detail::require_params(p, "weibull_pdf");
    detail::require_nonnegative(t, "weibull_pdf", "t");
    if (t == 0.0) {
        if (p.alpha < 1.0) {
            return std::numeric_limits<double>::infinity();
        }
        return p.alpha == 1.0 ? p.lambda : 0.0;
    }
    const double log_t = std::log(t);
    const double log_hazard = std::log(p.lambda) + p.alpha * log_t;
    return std::exp(std::log(p.alpha) + log_hazard - log_t - std::exp(log_hazard));
}

/// Standard extreme-value (minimum Gumbel) error: f(z) = exp(z - e^z),
/// 1 - F(z) = exp(-e^z).
inline LogDensitySurvival extreme_value_logpdf_logsf(double z) noexcept
{
    const double ez = std::exp(z);
    return {z - ez, -ez};
}

/// Probability of a visit within `horizon` hours once a send moves the user
/// into the post-send state.
inline double prob_visit_if_send(double horizon, const WeibullParams& post)
{
    detail::require_positive(horizon, "prob_visit_if_send", "horizon");
    return weibull_cdf(horizon, post);
}

/// Probability of a visit within `horizon` hours when the user stays in the
/// current state, given `w0` hours already elapsed there without a visit.
inline double prob_visit_if_not_send(double horizon, const WeibullParams& pre, double w0)
{
    detail::require_params(pre, "prob_visit_if_not_send");
    detail::require_positive(horizon, "prob_visit_if_not_send", "horizon");
    detail::require_nonnegative(w0, "prob_visit_if_not_send", "w0");
    return -std::expm1(-detail::conditional_hazard(horizon, w0, pre));
}

/// Additional visit probability within `horizon` from sending now rather than
/// waiting: exp(-l0((T+W0)^a0 - W0^a0)) - exp(-l1 T^a1). Signed; negative
/// when the post-send state is worse than waiting.
inline double delta_effect(const StatePair& sp, double horizon)
{
    detail::require_params(sp.pre, "delta_effect");
    detail::require_params(sp.post, "delta_effect");
    detail::require_positive(horizon, "delta_effect", "horizon");
    detail::require_nonnegative(sp.elapsed_w0, "delta_effect", "elapsed_w0");
    const double stay_quiet = std::exp(-detail::conditional_hazard(horizon, sp.elapsed_w0, sp.pre));
    const double no_visit_after_send = std::exp(-detail::cumulative_hazard(horizon, sp.post));
    return stay_quiet - no_visit_after_send;
}

/// All three quantities at once; delta is the closed form, not p_send - p_wait.
inline VisitProbabilities visit_probabilities(const StatePair& sp, double horizon)
{
    return {prob_visit_if_send(horizon, sp.post), prob_visit_if_not_send(horizon, sp.pre, sp.elapsed_w0),
            delta_effect(sp, horizon)};
}

} // namespace notifsurv
