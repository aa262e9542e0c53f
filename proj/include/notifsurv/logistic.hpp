#pragma once

// Per-horizon logistic regression baseline on the same feature vectors.

#include "notifsurv/aft.hpp"
#include "notifsurv/design.hpp"
#include "notifsurv/errors.hpp"
#include "notifsurv/optimize.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace notifsurv {

class LogisticModel {
public:
    FeatureSchema schema;
    std::vector<double> weights; // raw feature space, schema order
    double horizon_hours = 0.0;
    Standardization standardization;
    FitDiagnostics diagnostics;

    [[nodiscard]] double predict(std::span<const double> x) const
    {
        if (x.size() != weights.size()) {
            throw DataError("schema mismatch: " + std::to_string(x.size()) + " features for a model with "
                            + std::to_string(weights.size()) + " weights");
        }
        const double eta = dot(weights, x);
        return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
    }

    void validate() const
    {
        if (weights.size() != schema.size()) {
            throw DataError("logistic model has " + std::to_string(weights.size()) + " weights but schema has "
                            + std::to_string(schema.size()) + " slots");
        }
        for (double w : weights) {
            if (!std::isfinite(w)) {
                throw DataError("logistic weight is not finite");
            }
        }
        if (!(horizon_hours > 0.0) || !std::isfinite(horizon_hours)) {
            throw DataError("logistic horizon must be positive");
        }
    }
};

namespace detail {

// log(1 + e^eta) without overflow.
inline double softplus(double eta) noexcept
{
    return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

inline double sigmoid(double eta) noexcept
{
    return eta >= 0.0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

inline double logistic_objective(const DesignMatrix& X, const std::vector<unsigned char>& labels,
                                 std::span<const double> w, std::span<double> grad)
{
    std::vector<CompensatedSum> g(X.cols);
    CompensatedSum total;
    for (std::size_t i = 0; i < X.rows; ++i) {
        const auto x = X.row(i);
        const double eta = dot(w, x);
        const double yi = labels[i];
        total.add(softplus(eta) - yi * eta);
        const double r = sigmoid(eta) - yi;
        for (std::size_t j = 0; j < X.cols; ++j) {
            g[j].add(r * x[j]);
        }
    }
    for (std::size_t j = 0; j < X.cols; ++j) {
        grad[j] = g[j].value();
    }
    return total.value();
}

inline std::vector<unsigned char> as_labels(const std::vector<bool>& labels)
{
    return {labels.begin(), labels.end()};
}

} // namespace detail

/// Summed logistic negative log-likelihood and gradient in raw feature space.
inline ObjectiveValue logistic_negloglik_and_gradient(std::span<const double> weights,
                                                      const std::vector<Observation>& data,
                                                      const std::vector<bool>& labels)
{
    const std::size_t p = checked_width(data);
    if (weights.size() != p || labels.size() != data.size()) {
        throw DataError("logistic objective: size mismatch");
    }
    const auto X = build_design(data, identity_standardization(p));
    ObjectiveValue out;
    out.gradient.assign(p, 0.0);
    out.value = detail::logistic_objective(X, detail::as_labels(labels), weights, out.gradient);
    return out;
}

/// Ridge-regularized logistic MLE for one label horizon. Labels come from the
/// evaluation labelers (one per observation).
inline LogisticModel fit_logistic(const std::vector<Observation>& data, const FeatureSchema& schema,
                                  double horizon_hours, const std::vector<bool>& labels, const OptConfig& cfg)
{
    cfg.validate();
    if (!(horizon_hours > 0.0) || !std::isfinite(horizon_hours)) {
        throw ConfigError("logistic horizon must be positive");
    }
    const std::size_t p = checked_width(data);
    if (p != schema.size()) {
        throw DataError("schema mismatch: observations have " + std::to_string(p) + " slots, schema "
                        + std::to_string(schema.size()));
    }
    if (labels.size() != data.size()) {
        throw DataError("label count does not match observation count");
    }
    std::size_t positives = 0;
    for (bool b : labels) {
        positives += b ? 1 : 0;
    }
    if (positives == 0 || positives == labels.size()) {
        throw DataError("logistic regression needs both classes; got " + std::to_string(positives) + " positives of "
                        + std::to_string(labels.size()));
    }
    const std::size_t icpt = schema.intercept_index();
    const auto st = compute_standardization(data, icpt);
    const auto X = build_design(data, st);
    const auto y = detail::as_labels(labels);
    const double n = static_cast<double>(data.size());

    auto objective = [&](std::span<const double> w, std::span<double> grad) {
        double v = detail::logistic_objective(X, y, w, grad) / n;
        for (double& gi : grad) {
            gi /= n;
        }
        for (std::size_t j = 0; j < p; ++j) {
            if (j != icpt) {
                v += 0.5 * cfg.ridge * w[j] * w[j];
                grad[j] += cfg.ridge * w[j];
            }
        }
        return v;
    };

    std::vector<double> w0(p, 0.0);
    const double base = static_cast<double>(positives) / n;
    w0[icpt] = std::log(base / (1.0 - base));
    const OptResult res = minimize(objective, std::move(w0), cfg);

    LogisticModel m;
    m.schema = schema;
    m.weights = unstandardize(res.x, st, icpt);
    m.horizon_hours = horizon_hours;
    m.standardization = st;
    auto& d = m.diagnostics;
    d.grad_max_norm = res.grad_max_norm;
    d.iterations = res.iterations;
    d.evaluations = res.evaluations;
    d.converged = res.converged;
    d.message = res.message;
    d.n_observations = data.size();
    d.n_positive = positives;
    d.ridge = cfg.ridge;
    d.history = res.history;
    {
        std::vector<double> g(p);
        d.negloglik = detail::logistic_objective(build_design(data, identity_standardization(p)), y, m.weights, g);
    }
    if (!res.converged) {
        throw ConvergenceError("logistic fit did not converge: " + res.message, d);
    }
    return m;
}

} // namespace notifsurv
