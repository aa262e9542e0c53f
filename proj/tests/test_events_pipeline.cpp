#include <catch2/catch_amalgamated.hpp>

#include "notifsurv/pipeline.hpp"

#include <algorithm>
#include <random>

using namespace notifsurv;

namespace {

Event send(const std::string& user, double t, int badge = 1, std::map<std::string, double> f = {{"p1", 0.5}})
{
    return {user, t, EventKind::NotificationSend, badge, std::move(f)};
}

Event visit(const std::string& user, double t) { return {user, t, EventKind::Visit, 0, {}}; }

FeatureSchema state_schema()
{
    return FeatureSchema({{"intercept", SlotKind::Intercept, {}, false},
                          {"p1", SlotKind::Raw, {}, false},
                          {"badge_count", SlotKind::BadgeCount, {}, true},
                          {"state_age", SlotKind::StateAge, {}, true},
                          {"visits_7d", SlotKind::VisitsPastWeek, {}, true},
                          {"sends_7d", SlotKind::SendsPastWeek, {}, true},
                          {"badge_x_p1", SlotKind::Interaction, {"badge_count", "p1"}, true}});
}

std::vector<Event> fig5(const std::string& user = "u")
{
    return {send(user, 0, 1), visit(user, 5), send(user, 8, 1), send(user, 20, 2), send(user, 30, 3), visit(user, 33)};
}

} // namespace

TEST_CASE("hand trace of an interleaved stream")
{
    const auto schema = state_schema();
    BuildStats stats;
    const auto obs = build_observations(fig5(), schema, {}, &stats);
    REQUIRE(obs.size() == 4);
    const double T[] = {5, 12, 10, 3};
    const bool d[] = {true, false, false, true};
    for (int i = 0; i < 4; ++i) {
        CHECK(obs[i].duration == T[i]);
        CHECK(obs[i].uncensored == d[i]);
    }
    CHECK(stats.sends == 4);
    CHECK(stats.observations == 4);
    CHECK(stats.uncensored == 2);
    CHECK(stats.unresolved_sends == 0);

    SECTION("state snapshots")
    {
        // state age: time since the later of the last visit and last send
        CHECK(obs[0].features.values[3] == 0.0);
        CHECK(obs[1].features.values[3] == 3.0);  // visit at 5, send at 8
        CHECK(obs[2].features.values[3] == 12.0); // send at 8
        CHECK(obs[3].features.values[3] == 10.0); // send at 20
        CHECK(obs[3].features.values[2] == 3.0);  // badge
        CHECK(obs[3].features.values[6] == 1.5);  // badge x p1
        CHECK(obs[3].features.values[4] == 1.0);  // one visit in the past week
        CHECK(obs[3].features.values[5] == 3.0);  // three earlier sends
        CHECK(obs[0].features.values[0] == 1.0);
        CHECK(obs[0].features.schema_id == schema.id());
    }
}

TEST_CASE("single send yields nothing")
{
    BuildStats stats;
    CHECK(build_observations({send("u", 0)}, state_schema(), {}, &stats).empty());
    CHECK(stats.unresolved_sends == 1);
}

TEST_CASE("near-simultaneous visit is clamped to the duration floor")
{
    PipelineConfig cfg;
    BuildStats stats;
    const auto obs = build_observations({send("u", 0), visit("u", 1e-9)}, state_schema(), cfg, &stats);
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].duration == cfg.duration_floor_hours);
    CHECK(obs[0].uncensored);
    CHECK(stats.clamped_durations == 1);
}

TEST_CASE("visit sorts before a send at the same timestamp")
{
    // The visit is attributed to the earlier state; the simultaneous send has no successor.
    const auto obs = build_observations({send("u", 0), send("u", 4), visit("u", 4)}, state_schema(), {});
    REQUIRE(obs.size() == 1);
    CHECK(obs[0].duration == 4.0);
    CHECK(obs[0].uncensored);

    const auto tie = build_observations({send("u", 0), visit("u", 0)}, state_schema(), {});
    CHECK(tie.empty());
}

TEST_CASE("unsorted input and thread count do not change output")
{
    std::vector<Event> events;
    for (const char* u : {"b", "a", "c", "d"}) {
        auto f = fig5(u);
        events.insert(events.end(), f.begin(), f.end());
    }
    const auto schema = state_schema();
    const auto ref = build_observations(events, schema, {});
    std::mt19937_64 rng(1);
    std::shuffle(events.begin(), events.end(), rng);
    for (unsigned threads : {1u, 2u, 3u, 8u}) {
        const auto got = build_observations(events, schema, {}, nullptr, threads);
        REQUIRE(got.size() == ref.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].user_id == ref[i].user_id);
            CHECK(got[i].origin_timestamp == ref[i].origin_timestamp);
            CHECK(got[i].duration == ref[i].duration);
            CHECK(got[i].features.values == ref[i].features.values);
        }
    }
    CHECK(ref.front().user_id == "a");
    CHECK(ref.back().user_id == "d");
}

TEST_CASE("observation invariants on random streams")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    std::vector<Event> events;
    std::size_t sends_with_successor = 0;
    for (int k = 0; k < 30; ++k) {
        const std::string id = "u" + std::to_string(k);
        std::vector<Event> s;
        for (int j = 0; j < 20; ++j) {
            s.push_back(j % 3 == 0 ? visit(id, u(rng)) : send(id, u(rng)));
        }
        auto sorted = s;
        sort_user_events(sorted);
        for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
            sends_with_successor += sorted[i].kind == EventKind::NotificationSend ? 1 : 0;
        }
        events.insert(events.end(), s.begin(), s.end());
    }
    const auto obs = build_observations(events, state_schema(), {});
    CHECK(obs.size() == sends_with_successor);
    for (const auto& o : obs) {
        CHECK(o.duration > 0.0);
    }
}

TEST_CASE("window bounds restrict origins but not successors")
{
    PipelineConfig cfg;
    cfg.window_start = 5.0;
    cfg.window_end = 25.0;
    BuildStats stats;
    const auto obs = build_observations(fig5(), state_schema(), cfg, &stats);
    REQUIRE(obs.size() == 2); // sends at 8 and 20
    CHECK(obs[0].origin_timestamp == 8.0);
    CHECK(obs[1].origin_timestamp == 20.0);
    CHECK(obs[1].duration == 10.0); // resolved by the out-of-window send at 30
    CHECK(stats.out_of_window_sends == 2);
}

TEST_CASE("pipeline errors")
{
    const auto schema = state_schema();
    SECTION("missing raw feature")
    {
        CHECK_THROWS_AS(build_observations({send("u", 0, 1, {}), visit("u", 1)}, schema, {}), DataError);
    }
    SECTION("non-finite timestamp")
    {
        CHECK_THROWS_AS(build_observations({send("u", NAN), visit("u", 1)}, schema, {}), DataError);
    }
    SECTION("non-finite feature")
    {
        CHECK_THROWS_AS(build_observations({send("u", 0, 1, {{"p1", INFINITY}}), visit("u", 1)}, schema, {}),
                        DataError);
    }
    SECTION("bad config")
    {
        PipelineConfig cfg;
        cfg.duration_floor_hours = 0.0;
        CHECK_THROWS_AS(build_observations(fig5(), schema, cfg), ConfigError);
        cfg = {};
        cfg.window_start = 10;
        cfg.window_end = 10;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("outlier filter")
{
    PipelineConfig cfg;
    SECTION("three sends are kept")
    {
        const auto r = filter_outliers({send("u", 0), send("u", 1), send("u", 2)}, cfg);
        CHECK(r.events.size() == 3);
        CHECK(r.report.users_kept == 1);
    }
    SECTION("201 sends in a week drops the whole user")
    {
        std::vector<Event> ev;
        for (int i = 0; i < 201; ++i) {
            ev.push_back(send("heavy", 0.5 * i));
        }
        ev.push_back(visit("heavy", 3.0));
        ev.push_back(send("light", 1.0));
        const auto r = filter_outliers(ev, cfg);
        CHECK(r.events.size() == 1);
        CHECK(r.report.users_over_notifications == 1);
        CHECK(r.report.dropped_users == std::vector<std::string>{"heavy"});
    }
    SECTION("exactly at the limit is kept")
    {
        std::vector<Event> ev;
        for (int i = 0; i < 200; ++i) {
            ev.push_back(send("edge", 0.5 * i));
        }
        CHECK(filter_outliers(ev, cfg).events.size() == 200);
    }
    SECTION("limits apply per week")
    {
        std::vector<Event> ev;
        for (int i = 0; i < 300; ++i) {
            ev.push_back(send("spread", 168.0 * (i % 2) + 0.1 * i));
        }
        CHECK(filter_outliers(ev, cfg).report.users_kept == 1);
    }
    SECTION("visit limit")
    {
        cfg.max_visits = 2;
        const auto r = filter_outliers({visit("v", 1), visit("v", 2), visit("v", 3), send("w", 0)}, cfg);
        CHECK(r.report.users_over_visits == 1);
        CHECK(r.report.users_kept == 1);
    }
    SECTION("ten users, one heavy")
    {
        std::vector<Event> ev;
        for (int k = 0; k < 10; ++k) {
            const int n = k == 4 ? 250 : 5;
            for (int i = 0; i < n; ++i) {
                ev.push_back(send("u" + std::to_string(k), 0.3 * i));
            }
        }
        const auto r = filter_outliers(ev, cfg);
        CHECK(r.report.users_total == 10);
        CHECK(r.report.users_kept == 9);
        std::set<std::string> left;
        for (const auto& e : r.events) {
            left.insert(e.user_id);
        }
        CHECK(left.size() == 9);
    }
    SECTION("empty input")
    {
        CHECK(filter_outliers({}, cfg).events.empty());
    }
}

TEST_CASE("per-user split")
{
    std::vector<Observation> obs;
    for (int k = 0; k < 100; ++k) {
        for (int j = 0; j < 1 + k % 3; ++j) {
            Observation o;
            o.user_id = "user" + std::to_string(k);
            o.duration = 1.0;
            o.origin_timestamp = j;
            obs.push_back(o);
        }
    }
    const auto a = split(obs, 42);
    const auto b = split(obs, 42);
    std::set<std::string> train_users;
    std::set<std::string> test_users;
    for (const auto& o : a.train) {
        train_users.insert(o.user_id);
    }
    for (const auto& o : a.test) {
        test_users.insert(o.user_id);
    }
    CHECK(test_users.size() == 20);
    CHECK(train_users.size() == 80);
    for (const auto& u : test_users) {
        CHECK_FALSE(train_users.contains(u));
    }
    CHECK(a.train.size() + a.test.size() == obs.size());
    REQUIRE(a.test.size() == b.test.size());
    for (std::size_t i = 0; i < a.test.size(); ++i) {
        CHECK(a.test[i].user_id == b.test[i].user_id);
    }
    const auto c = split(obs, 43);
    std::set<std::string> other;
    for (const auto& o : c.test) {
        other.insert(o.user_id);
    }
    CHECK(other != test_users);

    SECTION("one user lands on one side")
    {
        std::vector<Observation> one(obs.begin(), obs.begin() + 1);
        const auto s = split(one, 1);
        CHECK(s.train.size() + s.test.size() == 1);
    }
    SECTION("empty")
    {
        const auto s = split({}, 1);
        CHECK(s.train.empty());
        CHECK(s.test.empty());
    }
}

TEST_CASE("schema validation")
{
    CHECK_THROWS_AS(FeatureSchema({{"a", SlotKind::Raw, {}, false}}), ConfigError);
    CHECK_THROWS_AS(FeatureSchema({{"i", SlotKind::Intercept, {}, false}, {"i", SlotKind::Raw, {}, false}}),
                    ConfigError);
    CHECK_THROWS_AS(FeatureSchema({{"i", SlotKind::Intercept, {}, false}, {"x", SlotKind::Interaction, {"i"}, false}}),
                    ConfigError);
    CHECK_THROWS_AS(
        FeatureSchema({{"i", SlotKind::Intercept, {}, false}, {"x", SlotKind::Interaction, {"i", "zz"}, false}}),
        ConfigError);
    CHECK_THROWS_AS(slot_kind_from_string("bogus"), ConfigError);

    const auto s = FeatureSchema::standard({"p1", "p2"});
    CHECK(s.names() == std::vector<std::string>{"intercept", "p1", "p2", "badge_count", "badge_count*p1"});
    CHECK(s.id() == FeatureSchema::standard({"p1", "p2"}).id());
    CHECK(s.id() != FeatureSchema::standard({"p1", "p3"}).id());
    const auto part = s.default_partition();
    CHECK(part.offline == std::vector<std::size_t>{0, 1, 2});
    CHECK(part.online == std::vector<std::size_t>{3, 4});
}
