#include <catch2/catch_amalgamated.hpp>

#include "notifsurv/aft.hpp"
#include "notifsurv/logistic.hpp"
#include "notifsurv/pipeline.hpp"
#include "notifsurv/simulator.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <random>

using namespace notifsurv;
using Catch::Approx;

namespace {

FeatureSchema raw_schema(std::size_t n_raw)
{
    std::vector<Slot> s{{"intercept", SlotKind::Intercept, {}, false}};
    for (std::size_t k = 0; k < n_raw; ++k) {
        s.push_back({"x" + std::to_string(k + 1), SlotKind::Raw, {}, false});
    }
    return FeatureSchema(std::move(s));
}

Observation make_obs(std::vector<double> x, double t, bool event, std::string user = "u")
{
    Observation o;
    o.features.values = std::move(x);
    o.duration = t;
    o.uncensored = event;
    o.user_id = std::move(user);
    return o;
}

// Censored Weibull AFT sample with independent exponential censoring.
std::vector<Observation> aft_sample(std::size_t n, const std::vector<double>& b, double sigma, double censor_rate,
                                    std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::exponential_distribution<double> cens(censor_rate > 0 ? censor_rate : 1.0);
    std::vector<Observation> out;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(b.size());
        x[0] = 1.0;
        for (std::size_t j = 1; j < b.size(); ++j) {
            x[j] = normal(rng);
        }
        const double t = time_to_visit_from_uniform(dot(b, x), sigma, open_unit_draw(rng));
        const double c = censor_rate > 0 ? cens(rng) : INFINITY;
        out.push_back(make_obs(x, std::min(t, c), t <= c, "u" + std::to_string(i)));
    }
    return out;
}

OptConfig no_ridge()
{
    OptConfig c;
    c.ridge = 0.0;
    return c;
}

} // namespace

TEST_CASE("AFT negative log-likelihood hand values")
{
    const std::vector<double> params{0.0, 0.0};
    auto v = aft_negloglik_and_gradient(params, {make_obs({1.0}, 1.0, true)});
    CHECK(v.value == Approx(1.0).epsilon(1e-15));
    // d/db = -(e^z - 1) x / sigma = 0; d/dlog_sigma = -(e^z - 1) z + 1 = 1
    CHECK(v.gradient[0] == Approx(0.0).margin(1e-15));
    CHECK(v.gradient[1] == Approx(1.0).epsilon(1e-15));
    auto c = aft_negloglik_and_gradient(params, {make_obs({1.0}, 1.0, false)});
    CHECK(c.value == Approx(1.0).epsilon(1e-15));
    CHECK(c.gradient[0] == Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("AFT objective matches the Weibull log-density")
{
    // uncensored term = -log f(T) of Weibull(lambda = exp(-mu/sigma), alpha = 1/sigma)
    const double mu = 0.7;
    const double log_sigma = 0.3;
    const double T = 2.5;
    const auto v = aft_negloglik_and_gradient(std::vector<double>{mu, log_sigma}, {make_obs({1.0}, T, true)});
    const WeibullParams p{std::exp(-mu / std::exp(log_sigma)), std::exp(-log_sigma)};
    CHECK(v.value == Approx(-std::log(weibull_pdf(T, p))).epsilon(1e-12));
    const auto c = aft_negloglik_and_gradient(std::vector<double>{mu, log_sigma}, {make_obs({1.0}, T, false)});
    CHECK(c.value == Approx(-weibull_log_sf(T, p)).epsilon(1e-12));
}

TEST_CASE("AFT gradient matches central differences")
{
    const auto data = aft_sample(50, {0.5, -0.3, 0.8}, 1.3, 0.2, 17);
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        std::vector<double> p{u(rng), u(rng), u(rng), 0.5 * u(rng)};
        const auto v = aft_negloglik_and_gradient(p, data);
        const auto fd = oracle::central_difference(
            [&](const std::vector<double>& q) { return aft_negloglik_and_gradient(q, data).value; }, p);
        CHECK(oracle::relative_max_error(v.gradient, fd) < 1e-6);
    }
}

TEST_CASE("AFT objective errors")
{
    CHECK_THROWS_AS(aft_negloglik_and_gradient(std::vector<double>{0.0, 0.0}, {}), DataError);
    CHECK_THROWS_AS(aft_negloglik_and_gradient(std::vector<double>{0.0}, {make_obs({1.0}, 1.0, true)}), DataError);
    CHECK_THROWS_AS(aft_negloglik_and_gradient(std::vector<double>{0.0, 0.0}, {make_obs({1.0}, 0.0, true)}),
                    DataError);
    try {
        aft_negloglik_and_gradient(std::vector<double>{-800.0, 0.0},
                                   {make_obs({1.0}, 1.0, true), make_obs({1.0}, 2.0, false)});
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("observation 0") != std::string::npos);
    }
}

TEST_CASE("exponential data: closed-form rate")
{
    std::mt19937_64 rng(5);
    std::exponential_distribution<double> ex(0.2);
    std::vector<Observation> data;
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double t = ex(rng);
        sum += t;
        data.push_back(make_obs({1.0}, t, true));
    }
    const auto m = fit_aft(data, raw_schema(0), no_ridge());
    const double rate = static_cast<double>(data.size()) / sum;
    CHECK(std::exp(-m.coefficients[0]) == Approx(rate).epsilon(0.01));
    CHECK(m.sigma() == Approx(1.0).epsilon(0.02));
    CHECK(m.diagnostics.converged);
    CHECK(m.diagnostics.grad_max_norm < 1e-7);
}

TEST_CASE("AFT fit properties")
{
    const auto schema = raw_schema(2);
    const auto data = aft_sample(4000, {1.0, 0.4, -0.6}, 1.5, 0.05, 3);
    const auto m = fit_aft(data, schema, no_ridge());

    SECTION("objective is non-increasing along iterations")
    {
        const auto& h = m.diagnostics.history;
        REQUIRE(h.size() >= 2);
        for (std::size_t i = 1; i < h.size(); ++i) {
            CHECK(h[i] <= h[i - 1]);
        }
    }
    SECTION("stationary in raw space")
    {
        std::vector<double> p = m.coefficients;
        p.push_back(m.log_sigma);
        const auto v = aft_negloglik_and_gradient(p, data);
        for (double g : v.gradient) {
            CHECK(std::abs(g) / static_cast<double>(data.size()) < 1e-6);
        }
        CHECK(v.value == Approx(m.diagnostics.negloglik).epsilon(1e-12));
    }
    SECTION("sigma above one on data generated with sigma 1.5")
    {
        CHECK(m.sigma() > 1.0);
        CHECK(m.alpha() < 1.0);
        CHECK(m.alpha() > 0.0);
    }
    SECTION("duplicating every observation leaves the fit unchanged")
    {
        auto twice = data;
        twice.insert(twice.end(), data.begin(), data.end());
        const auto m2 = fit_aft(twice, schema, no_ridge());
        for (std::size_t j = 0; j < m.coefficients.size(); ++j) {
            CHECK(m2.coefficients[j] == Approx(m.coefficients[j]).margin(1e-6));
        }
        CHECK(m2.log_sigma == Approx(m.log_sigma).margin(1e-6));
    }
    SECTION("deterministic")
    {
        const auto m2 = fit_aft(data, schema, no_ridge());
        CHECK(m2.coefficients == m.coefficients);
        CHECK(m2.log_sigma == m.log_sigma);
    }
    SECTION("gradient descent reaches the same optimum")
    {
        OptConfig gd = no_ridge();
        gd.method = OptMethod::GradientDescent;
        gd.tol = 1e-6;
        gd.max_iters = 20000;
        const auto m2 = fit_aft(data, schema, gd);
        for (std::size_t j = 0; j < m.coefficients.size(); ++j) {
            CHECK(m2.coefficients[j] == Approx(m.coefficients[j]).margin(1e-4));
        }
    }
    SECTION("time rescaling shifts only the intercept")
    {
        auto scaled = data;
        for (auto& o : scaled) {
            o.duration *= 24.0;
        }
        const auto m2 = fit_aft(scaled, schema, no_ridge());
        CHECK(m2.coefficients[0] - m.coefficients[0] == Approx(std::log(24.0)).margin(1e-6));
        CHECK(m2.coefficients[1] == Approx(m.coefficients[1]).margin(1e-6));
        CHECK(m2.coefficients[2] == Approx(m.coefficients[2]).margin(1e-6));
        CHECK(m2.log_sigma == Approx(m.log_sigma).margin(1e-6));
    }
    SECTION("ridge shrinks non-intercept coefficients")
    {
        OptConfig r;
        r.ridge = 1.0;
        const auto m2 = fit_aft(data, schema, r);
        CHECK(std::abs(m2.coefficients[1]) < std::abs(m.coefficients[1]));
        CHECK(std::abs(m2.coefficients[2]) < std::abs(m.coefficients[2]));
        CHECK(m2.diagnostics.ridge == 1.0);
    }
}

TEST_CASE("AFT fit errors")
{
    const auto schema = raw_schema(1);
    SECTION("all censored")
    {
        std::vector<Observation> data{make_obs({1.0, 0.3}, 1.0, false), make_obs({1.0, -0.2}, 2.0, false)};
        CHECK_THROWS_AS(fit_aft(data, schema, {}), DataError);
    }
    SECTION("empty")
    {
        CHECK_THROWS_AS(fit_aft({}, schema, {}), DataError);
    }
    SECTION("width mismatch")
    {
        CHECK_THROWS_AS(fit_aft({make_obs({1.0}, 1.0, true)}, schema, {}), DataError);
    }
    SECTION("iteration cap")
    {
        const auto data = aft_sample(500, {1.0, 0.4}, 1.5, 0.1, 8);
        OptConfig c;
        c.max_iters = 1;
        try {
            fit_aft(data, schema, c);
            FAIL("expected ConvergenceError");
        } catch (const ConvergenceError& e) {
            CHECK_FALSE(e.diagnostics.converged);
            CHECK(e.diagnostics.iterations == 1);
        }
    }
    SECTION("invalid config")
    {
        OptConfig c;
        c.tol = 0.0;
        CHECK_THROWS_AS(fit_aft({make_obs({1.0, 0.0}, 1.0, true)}, schema, c), ConfigError);
    }
}

TEST_CASE("logistic gradient matches central differences")
{
    const auto data = aft_sample(50, {0.5, -0.3, 0.8}, 1.3, 0.0, 23);
    std::vector<bool> labels;
    for (const auto& o : data) {
        labels.push_back(o.duration < 2.0);
    }
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
        std::vector<double> w{u(rng), u(rng), u(rng)};
        const auto v = logistic_negloglik_and_gradient(w, data, labels);
        const auto fd = oracle::central_difference(
            [&](const std::vector<double>& q) { return logistic_negloglik_and_gradient(q, data, labels).value; }, w);
        CHECK(oracle::relative_max_error(v.gradient, fd) < 1e-6);
    }
}

TEST_CASE("logistic fit")
{
    const auto schema = raw_schema(1);
    SECTION("labels independent of features: intercept is the base-rate logit")
    {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> normal;
        std::vector<Observation> data;
        std::vector<bool> labels;
        for (int i = 0; i < 1000; ++i) {
            data.push_back(make_obs({1.0, static_cast<double>(i % 2)}, 1.0, true));
            labels.push_back((i / 2) % 10 < 3); // 30% positive in both feature groups
        }
        const auto m = fit_logistic(data, schema, 4.0, labels, {});
        CHECK(m.weights[1] == Approx(0.0).margin(1e-5));
        CHECK(m.weights[0] == Approx(std::log(0.3 / 0.7)).margin(1e-5));
        CHECK(m.horizon_hours == 4.0);
        const auto again = fit_logistic(data, schema, 4.0, labels, {});
        CHECK(again.weights == m.weights);
    }
    SECTION("separable data: finite weights, probabilities ordered with the feature")
    {
        std::vector<Observation> data;
        std::vector<bool> labels;
        for (int i = -10; i <= 10; ++i) {
            if (i == 0) {
                continue;
            }
            data.push_back(make_obs({1.0, 0.1 * i}, 1.0, true));
            labels.push_back(i > 0);
        }
        OptConfig c;
        c.ridge = 1e-2;
        const auto m = fit_logistic(data, schema, 2.0, labels, c);
        CHECK(std::isfinite(m.weights[1]));
        CHECK(m.weights[1] > 0.0);
        for (std::size_t i = 1; i < data.size(); ++i) {
            CHECK(m.predict(data[i].features.values) > m.predict(data[i - 1].features.values));
        }
    }
    SECTION("single class")
    {
        std::vector<Observation> data{make_obs({1.0, 0.0}, 1.0, true), make_obs({1.0, 1.0}, 1.0, true)};
        CHECK_THROWS_AS(fit_logistic(data, schema, 4.0, {true, true}, {}), DataError);
        CHECK_THROWS_AS(fit_logistic(data, schema, 4.0, {false, false}, {}), DataError);
    }
    SECTION("bad horizon")
    {
        std::vector<Observation> data{make_obs({1.0, 0.0}, 1.0, true), make_obs({1.0, 1.0}, 1.0, true)};
        CHECK_THROWS_AS(fit_logistic(data, schema, 0.0, {true, false}, {}), ConfigError);
    }
}

TEST_CASE("optimizer on a quadratic and the Rosenbrock function")
{
    OptConfig c;
    c.tol = 1e-9;
    auto quad = [](std::span<const double> x, std::span<double> g) {
        g[0] = 2.0 * (x[0] - 3.0);
        g[1] = 20.0 * (x[1] + 1.0);
        return (x[0] - 3.0) * (x[0] - 3.0) + 10.0 * (x[1] + 1.0) * (x[1] + 1.0);
    };
    auto r = minimize(quad, {0.0, 0.0}, c);
    CHECK(r.converged);
    CHECK(r.x[0] == Approx(3.0).margin(1e-8));
    CHECK(r.x[1] == Approx(-1.0).margin(1e-8));

    auto rosen = [](std::span<const double> x, std::span<double> g) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    c.max_iters = 5000;
    r = minimize(rosen, {-1.2, 1.0}, c);
    CHECK(r.converged);
    CHECK(r.x[0] == Approx(1.0).margin(1e-6));
    CHECK(r.x[1] == Approx(1.0).margin(1e-6));
    for (std::size_t i = 1; i < r.history.size(); ++i) {
        CHECK(r.history[i] < r.history[i - 1]);
    }

    auto bad = [](std::span<const double>, std::span<double> g) {
        g[0] = 0.0;
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(minimize(bad, {0.0}, c), NumericalError);
}
