#pragma once

// Delta-effect scoring for one user at one moment, and the offline/online
// split of the linear predictor.

#include "notifsurv/aft.hpp"
#include "notifsurv/detail/hash.hpp"
#include "notifsurv/errors.hpp"
#include "notifsurv/schema.hpp"
#include "notifsurv/survival.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace notifsurv {

struct ScoringContext {
    FeatureVector features_now; // X0, state as-is
    double w0_hours = 0.0;      // time since the current state started
    double horizon_hours = 24.0;

    void validate() const
    {
        if (!(w0_hours >= 0.0) || !std::isfinite(w0_hours)) {
            throw DataError("w0_hours must be finite and >= 0");
        }
        if (!(horizon_hours > 0.0) || !std::isfinite(horizon_hours)) {
            throw DataError("horizon must be finite and > 0");
        }
    }
};

struct DeltaEffectResult {
    double delta = 0.0;
    double p_send = 0.0;
    double p_wait = 0.0;
    double lambda0 = 0.0;
    double lambda1 = 0.0;
    double alpha = 0.0;
    double mu0 = 0.0;
    double mu1 = 0.0;
};

/// Features after a send: badge count + 1, state-age slots reset to 0,
/// interactions recomputed. Visit-recency and activity slots are untouched.
inline FeatureVector transition_features(const FeatureVector& x0, const FeatureSchema& schema)
{
    schema.check_vector(x0);
    if (!schema.has_state_slots()) {
        throw ConfigError("schema declares no state slots (badge_count / state_age); cannot derive post-send features");
    }
    FeatureVector x1 = x0;
    x1.schema_id = schema.id();
    for (std::size_t i = 0; i < schema.size(); ++i) {
        switch (schema.slots()[i].kind) {
        case SlotKind::BadgeCount: x1.values[i] += 1.0; break;
        case SlotKind::StateAge: x1.values[i] = 0.0; break;
        default: break;
        }
    }
    schema.recompute_interactions(x1.values);
    return x1;
}

inline DeltaEffectResult score_delta_effect(const ScoringContext& ctx, const WeibullAftModel& model)
{
    ctx.validate();
    model.schema.check_vector(ctx.features_now);
    const FeatureVector x1 = transition_features(ctx.features_now, model.schema);
    DeltaEffectResult r;
    r.mu0 = model.linear_predictor(ctx.features_now.values);
    r.mu1 = model.linear_predictor(x1.values);
    if (!std::isfinite(r.mu0) || !std::isfinite(r.mu1)) {
        throw NumericalError("non-finite linear predictor while scoring");
    }
    const WeibullParams pre = model.weibull(ctx.features_now.values);
    const WeibullParams post = model.weibull(x1.values);
    r.lambda0 = pre.lambda;
    r.lambda1 = post.lambda;
    r.alpha = pre.alpha;
    const auto probs = visit_probabilities({pre, post, ctx.w0_hours}, ctx.horizon_hours);
    r.delta = probs.delta;
    r.p_send = probs.p_send;
    r.p_wait = probs.p_wait;
    return r;
}

/// Stable identifier of a fitted model's parameters.
inline std::string model_version(const WeibullAftModel& m)
{
    std::string canon = m.schema.id();
    char buf[32];
    for (double c : m.coefficients) {
        std::snprintf(buf, sizeof buf, "|%.17g", c);
        canon += buf;
    }
    std::snprintf(buf, sizeof buf, "|%.17g", m.log_sigma);
    canon += buf;
    return detail::hex64(detail::fnv1a64(canon));
}

struct PartialScore {
    std::string user_id;
    double offline_dot = 0.0;
    double computed_at = 0.0;
    std::string model_version;
};

/// b . x restricted to the offline slots. Only those slots of `x` are read.
inline PartialScore partial_score(const std::string& user_id, const FeatureVector& x, const WeibullAftModel& model,
                                  const SlotPartition& partition, double computed_at)
{
    model.schema.check_vector(x);
    model.schema.validate_partition(partition);
    double s = 0.0;
    for (std::size_t j : partition.offline) {
        s += model.coefficients[j] * x.values[j];
    }
    return {user_id, s, computed_at, model_version(model)};
}

/// Full linear predictor from a partial score plus the online slots of `x`.
inline double combine(const PartialScore& partial, const FeatureVector& x, const WeibullAftModel& model,
                      const SlotPartition& partition)
{
    model.schema.check_vector(x);
    model.schema.validate_partition(partition);
    if (partial.model_version != model_version(model)) {
        throw DataError("partial score for user '" + partial.user_id + "' was computed with model "
                        + partial.model_version + ", not " + model_version(model));
    }
    double s = partial.offline_dot;
    for (std::size_t j : partition.online) {
        s += model.coefficients[j] * x.values[j];
    }
    return s;
}

} // namespace notifsurv
