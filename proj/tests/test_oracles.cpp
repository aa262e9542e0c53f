#include <catch2/catch_amalgamated.hpp>

#include "support/oracles.hpp"

#include <random>

// The test oracles are checked against each other and against known answers
// before they are trusted.

TEST_CASE("finite differences on a known gradient")
{
    const auto g = oracle::central_difference(
        [](const std::vector<double>& x) { return std::sin(x[0]) * x[1] * x[1]; }, {0.3, 2.0});
    CHECK(g[0] == Catch::Approx(std::cos(0.3) * 4.0).epsilon(1e-9));
    CHECK(g[1] == Catch::Approx(std::sin(0.3) * 4.0).epsilon(1e-9));
}

TEST_CASE("quadrature on a known integral")
{
    CHECK(oracle::gauss_legendre([](double x) { return std::exp(-x); }, 0.0, 5.0, 50)
          == Catch::Approx(1.0 - std::exp(-5.0)).epsilon(1e-13));
}

TEST_CASE("KS statistic of a perfect grid")
{
    std::vector<double> s;
    for (int i = 0; i < 1000; ++i) {
        s.push_back((i + 0.5) / 1000.0);
    }
    CHECK(oracle::ks_statistic(s, [](double x) { return x; }) == Catch::Approx(0.0005).epsilon(1e-9));
}

TEST_CASE("vertex enumeration agrees with the dense simplex without a click floor")
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> d(-0.3, 0.7);
    std::uniform_real_distribution<double> p(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 8;
        std::vector<double> delta(n);
        std::vector<double> click(n);
        for (int i = 0; i < n; ++i) {
            delta[i] = d(rng);
            click[i] = p(rng);
        }
        const double c_send = p(rng) * n;
        // rows: sum y <= c_send, y_i <= 1
        std::vector<std::vector<double>> A(n + 1, std::vector<double>(n, 0.0));
        std::vector<double> b(n + 1, 1.0);
        for (int i = 0; i < n; ++i) {
            A[0][i] = 1.0;
            A[i + 1][i] = 1.0;
        }
        b[0] = c_send;
        const auto s = oracle::simplex_max(A, b, delta);
        const auto v = oracle::lp_vertex_enumeration(delta, click, 0.0, c_send);
        REQUIRE(s.has_value());
        REQUIRE(v.feasible);
        CHECK(*s == Catch::Approx(v.objective).margin(1e-10));
    }
}

TEST_CASE("vertex enumeration on the worked instance")
{
    const auto r = oracle::lp_vertex_enumeration({0.3, 0.2, 0.1}, {0.1, 0.3, 0.2}, 0.5, 2.0);
    REQUIRE(r.feasible);
    CHECK(r.objective == Catch::Approx(0.3).margin(1e-12));
    CHECK(r.y == std::vector<double>{0.0, 1.0, 1.0});
    CHECK_FALSE(oracle::lp_vertex_enumeration({0.1}, {0.1}, 0.5, 1.0).feasible);
}
