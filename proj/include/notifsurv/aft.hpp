#pragma once

// Weibull accelerated failure-time regression: log T = b.x + sigma * eps with
// standard extreme-value eps, fitted by maximum likelihood on right-censored
// observations.

#include "notifsurv/design.hpp"
#include "notifsurv/errors.hpp"
#include "notifsurv/optimize.hpp"
#include "notifsurv/pipeline.hpp"
#include "notifsurv/schema.hpp"
#include "notifsurv/survival.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace notifsurv {

struct FitDiagnostics {
    double negloglik = 0.0;     // unpenalized, summed over the training data
    double grad_max_norm = 0.0; // of the optimized (standardized, mean, penalized) objective
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string message;
    std::size_t n_observations = 0;
    std::size_t n_positive = 0; // uncensored (AFT) or positive labels (logistic)
    double ridge = 0.0;
    std::vector<double> history; // optimizer objective per iteration; not persisted
};

class WeibullAftModel {
public:
    FeatureSchema schema;
    std::vector<double> coefficients; // raw feature space, schema order
    double log_sigma = 0.0;
    Standardization standardization;
    FitDiagnostics diagnostics;

    [[nodiscard]] double sigma() const noexcept { return std::exp(log_sigma); }
    [[nodiscard]] double alpha() const noexcept { return std::exp(-log_sigma); }

    [[nodiscard]] double linear_predictor(std::span<const double> x) const
    {
        if (x.size() != coefficients.size()) {
            throw DataError("schema mismatch: " + std::to_string(x.size()) + " features for a model with "
                            + std::to_string(coefficients.size()) + " coefficients");
        }
        return dot(coefficients, x);
    }

    /// lambda = exp(-mu / sigma), alpha = 1 / sigma.
    [[nodiscard]] WeibullParams weibull(std::span<const double> x) const
    {
        const double mu = linear_predictor(x);
        const WeibullParams p{std::exp(-mu / sigma()), alpha()};
        if (!std::isfinite(mu) || !p.valid()) {
            throw NumericalError("linear predictor " + std::to_string(mu) + " gives invalid Weibull parameters");
        }
        return p;
    }

    void validate() const
    {
        if (coefficients.size() != schema.size()) {
            throw DataError("model has " + std::to_string(coefficients.size()) + " coefficients but schema has "
                            + std::to_string(schema.size()) + " slots");
        }
        for (double c : coefficients) {
            if (!std::isfinite(c)) {
                throw DataError("model coefficient is not finite");
            }
        }
        if (!std::isfinite(log_sigma)) {
            throw DataError("model log_sigma is not finite");
        }
    }
};

/// Thrown when the optimizer stops before the gradient tolerance; carries the
/// last iterate.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, FitDiagnostics diag)
        : NumericalError(what), diagnostics(std::move(diag))
    {
    }
    FitDiagnostics diagnostics;
};

struct ObjectiveValue {
    double value = 0.0;
    std::vector<double> gradient;
};

namespace detail {

struct SurvivalColumns {
    std::vector<double> log_t;
    std::vector<unsigned char> event;
};

inline SurvivalColumns survival_columns(const std::vector<Observation>& data)
{
    SurvivalColumns c;
    c.log_t.reserve(data.size());
    c.event.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!(data[i].duration > 0.0) || !std::isfinite(data[i].duration)) {
            throw DataError("observation " + std::to_string(i) + " has non-positive duration");
        }
        c.log_t.push_back(std::log(data[i].duration));
        c.event.push_back(data[i].uncensored ? 1 : 0);
    }
    return c;
}

/// Summed negative log-likelihood over a design; params = (b, log_sigma).
/// Writes the gradient into `grad`. Non-finite terms either throw (naming the
/// row) or make the result +inf so a line search can back off.
inline double aft_objective(const DesignMatrix& X, const SurvivalColumns& y, std::span<const double> params,
                            std::span<double> grad, bool throw_on_nonfinite)
{
    const std::size_t p = X.cols;
    const double log_sigma = params[p];
    const double inv_sigma = std::exp(-log_sigma);
    std::vector<CompensatedSum> g(p + 1);
    CompensatedSum total;
    for (std::size_t i = 0; i < X.rows; ++i) {
        const auto x = X.row(i);
        const double mu = dot(params.first(p), x);
        const double z = (y.log_t[i] - mu) * inv_sigma;
        const double ez = std::exp(z);
        const double delta = y.event[i];
        const double term = y.event[i] ? (-z + ez + log_sigma + y.log_t[i]) : ez;
        if (!std::isfinite(term)) {
            if (throw_on_nonfinite) {
                throw NumericalError("non-finite log-likelihood term at observation " + std::to_string(i)
                                     + " (z=" + std::to_string(z) + ")");
            }
            for (auto& gi : grad) {
                gi = 0.0;
            }
            return std::numeric_limits<double>::infinity();
        }
        total.add(term);
        // d term / dz = e^z - delta; dz/db = -x/sigma; dz/dlog_sigma = -z
        const double r = ez - delta;
        for (std::size_t j = 0; j < p; ++j) {
            g[j].add(-r * x[j] * inv_sigma);
        }
        g[p].add(-r * z + delta);
    }
    for (std::size_t j = 0; j <= p; ++j) {
        grad[j] = g[j].value();
    }
    return total.value();
}

} // namespace detail

/// Negative log-likelihood of the censored Weibull AFT model and its gradient
/// with respect to (b, log_sigma), summed over `data` in raw feature space.
inline ObjectiveValue aft_negloglik_and_gradient(std::span<const double> params, const std::vector<Observation>& data)
{
    const std::size_t p = checked_width(data);
    if (params.size() != p + 1) {
        throw DataError("expected " + std::to_string(p + 1) + " parameters, got " + std::to_string(params.size()));
    }
    const auto X = build_design(data, identity_standardization(p));
    const auto y = detail::survival_columns(data);
    ObjectiveValue out;
    out.gradient.assign(p + 1, 0.0);
    out.value = detail::aft_objective(X, y, params, out.gradient, true);
    return out;
}

/// Maximum-likelihood fit with an optional ridge on non-intercept slots
/// (applied on the standardized scale). Throws DataError when every
/// observation is censored and ConvergenceError when the tolerance is not met.
inline WeibullAftModel fit_aft(const std::vector<Observation>& data, const FeatureSchema& schema, const OptConfig& cfg)
{
    cfg.validate();
    const std::size_t p = checked_width(data);
    if (p != schema.size()) {
        throw DataError("schema mismatch: observations have " + std::to_string(p) + " slots, schema "
                        + std::to_string(schema.size()));
    }
    const auto y = detail::survival_columns(data);
    CompensatedSum log_t_events;
    std::size_t n_events = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (y.event[i]) {
            log_t_events.add(y.log_t[i]);
            ++n_events;
        }
    }
    if (n_events == 0) {
        throw DataError("all observations are censored; the Weibull scale is not identifiable");
    }
    const std::size_t icpt = schema.intercept_index();
    const auto st = compute_standardization(data, icpt);
    const auto X = build_design(data, st);
    const double n = static_cast<double>(data.size());

    auto objective = [&](std::span<const double> params, std::span<double> grad) {
        double v = detail::aft_objective(X, y, params, grad, false);
        if (!std::isfinite(v)) {
            return v;
        }
        v /= n;
        for (double& gi : grad) {
            gi /= n;
        }
        for (std::size_t j = 0; j < p; ++j) {
            if (j != icpt) {
                v += 0.5 * cfg.ridge * params[j] * params[j];
                grad[j] += cfg.ridge * params[j];
            }
        }
        return v;
    };

    std::vector<double> x0(p + 1, 0.0);
    x0[icpt] = log_t_events.value() / static_cast<double>(n_events);
    const OptResult res = minimize(objective, std::move(x0), cfg);

    WeibullAftModel m;
    m.schema = schema;
    m.coefficients = unstandardize(std::span<const double>(res.x).first(p), st, icpt);
    m.log_sigma = res.x[p];
    m.standardization = st;
    auto& d = m.diagnostics;
    d.grad_max_norm = res.grad_max_norm;
    d.iterations = res.iterations;
    d.evaluations = res.evaluations;
    d.converged = res.converged;
    d.message = res.message;
    d.n_observations = data.size();
    d.n_positive = n_events;
    d.ridge = cfg.ridge;
    d.history = res.history;
    {
        std::vector<double> raw(m.coefficients);
        raw.push_back(m.log_sigma);
        std::vector<double> g(p + 1);
        const auto Xraw = build_design(data, identity_standardization(p));
        d.negloglik = detail::aft_objective(Xraw, y, raw, g, false);
    }
    if (!res.converged) {
        throw ConvergenceError("AFT fit did not converge: " + res.message + " (grad max-norm "
                                   + std::to_string(res.grad_max_norm) + " after " + std::to_string(res.iterations)
                                   + " iterations)",
                               d);
    }
    return m;
}

} // namespace notifsurv
