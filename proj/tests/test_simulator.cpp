#include <catch2/catch_amalgamated.hpp>

#include "notifsurv/pipeline.hpp"
#include "notifsurv/simulator.hpp"
#include "support/oracles.hpp"

#include <random>

using namespace notifsurv;
using Catch::Approx;

namespace {

SimConfig small_config()
{
    SimConfig c;
    c.n_users = 50;
    c.n_features = 2;
    c.true_coefficients = {2.5, 0.3, -0.2, 0.1, 0.05};
    c.true_sigma = 1.5;
    c.seed = 9;
    return c;
}

} // namespace

TEST_CASE("inverse-cdf draw")
{
    CHECK(time_to_visit_from_uniform(1.3, 2.0, 1.0 - std::exp(-1.0)) == Approx(std::exp(1.3)).epsilon(1e-14));
    CHECK_THROWS_AS(time_to_visit_from_uniform(0.0, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(time_to_visit_from_uniform(0.0, 1.0, 1.0), std::domain_error);
    // small sigma concentrates at exp(mu)
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
        const double t = time_to_visit_from_uniform(0.7, 1e-6, open_unit_draw(rng));
        CHECK(t == Approx(std::exp(0.7)).epsilon(1e-4));
    }
}

TEST_CASE("sampled times follow the Weibull law")
{
    SimConfig c;
    c.n_features = 0;
    c.with_interaction = false;
    c.true_coefficients = {1.2, 0.0};
    c.true_sigma = 1.5;
    std::mt19937_64 rng(99);
    const std::vector<double> x{1.0, 0.0};
    std::vector<double> draws(100000);
    for (auto& d : draws) {
        d = sample_time_to_visit(x, c, rng);
    }
    const WeibullParams p{std::exp(-1.2 / 1.5), 1.0 / 1.5};
    const double ks = oracle::ks_statistic(draws, [&](double t) { return weibull_cdf(t, p); });
    CHECK(ks < 0.006); // ~1.4/sqrt(n)
}

TEST_CASE("event log structure")
{
    const auto c = small_config();
    const auto out = generate_event_log(c);
    REQUIRE(out.users.size() == 50);
    CHECK(out.users[0].user_id == "u00");
    CHECK(out.users[49].user_id == "u49");
    std::map<std::string, std::vector<Event>> by_user;
    for (const auto& e : out.events) {
        by_user[e.user_id].push_back(e);
    }
    for (const auto& [u, evs] : by_user) {
        int badge = 0;
        for (std::size_t i = 0; i < evs.size(); ++i) {
            if (i > 0) {
                CHECK(evs[i].ts_hours >= evs[i - 1].ts_hours);
            }
            if (evs[i].kind == EventKind::NotificationSend) {
                CHECK(evs[i].badge_count == badge + 1);
                badge = evs[i].badge_count;
                CHECK(evs[i].features.size() == 2);
            } else {
                badge = 0;
            }
        }
        // every in-window send is resolved by a successor event
        CHECK((evs.back().kind == EventKind::Visit || evs.back().ts_hours >= c.window_hours));
    }
    BuildStats stats;
    const auto obs = build_observations(out.events, c.schema(), {}, &stats);
    std::size_t sends = 0;
    std::size_t visits = 0;
    for (const auto& u : out.users) {
        sends += u.sends;
        visits += u.visits;
    }
    CHECK(stats.observations == sends);
    CHECK(stats.uncensored == visits);
}

TEST_CASE("simulation is deterministic and thread-count independent")
{
    const auto c = small_config();
    const auto a = generate_event_log(c, 1);
    const auto b = generate_event_log(c, 4);
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(a.events[i].user_id == b.events[i].user_id);
        CHECK(a.events[i].ts_hours == b.events[i].ts_hours);
        CHECK(a.events[i].kind == b.events[i].kind);
    }
    auto c2 = c;
    c2.seed = 10;
    CHECK(generate_event_log(c2).events.size() != a.events.size());
}

TEST_CASE("censoring limits")
{
    SimConfig c;
    c.n_users = 200;
    c.n_features = 0;
    c.with_interaction = false;
    c.true_sigma = 1.0;
    SECTION("sends far more frequent than visits")
    {
        c.true_coefficients = {std::log(1000.0), 0.0};
        c.send_process.interval_hours = 1.0;
        CHECK(generate_event_log(c).censoring_rate() > 0.99);
    }
    SECTION("sends far rarer than visits")
    {
        c.true_coefficients = {std::log(0.01), 0.0};
        c.send_process.interval_hours = 100.0;
        c.window_hours = 2000.0;
        CHECK(generate_event_log(c).censoring_rate() < 0.01);
    }
}

TEST_CASE("poisson send process")
{
    auto c = small_config();
    c.send_process.kind = SendProcessKind::Poisson;
    c.send_process.rate_per_hour = 0.25;
    const auto out = generate_event_log(c);
    std::size_t sends = 0;
    for (const auto& u : out.users) {
        sends += u.sends;
    }
    // about 168 * 0.25 = 42 per user
    CHECK(static_cast<double>(sends) / 50.0 == Approx(42.0).epsilon(0.1));
}

TEST_CASE("simulator config validation")
{
    auto c = small_config();
    c.true_sigma = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.window_hours = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.true_coefficients.pop_back();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.send_process.interval_hours = 0.0;
    CHECK_THROWS_AS(generate_event_log(c), ConfigError);
}
