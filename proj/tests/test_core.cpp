#include <cmath>
#include <vector>

#include "doctest.h"
#include "kpzlab/harness/seed_stream.hpp"
#include "kpzlab/harness/summary.hpp"

using namespace kpzlab;

TEST_CASE("philox4x64-10 known answers") {
    CHECK(philox4x64_10({0, 0, 0, 0}, {0, 0}) ==
          PhiloxCounter{0x16554d9eca36314cull, 0xdb20fe9d672d0fdcull, 0xd7e772cee186176bull, 0x7e68b68aec7ba23bull});
    const auto m = ~std::uint64_t(0);
    CHECK(philox4x64_10({m, m, m, m}, {m, m}) ==
          PhiloxCounter{0x87b092c3013fe90bull, 0x438c3c67be8d0224ull, 0x9cc7d7c69cd777b6ull, 0xa09caebf594f0ba0ull});
}

TEST_CASE("seed stream reproducible") {
    SeedStream a(42, 7, StreamTag::test), b(42, 7, StreamTag::test);
    bool same = true;
    for (int i = 0; i < 1000000; ++i)
        if (a.normal() != b.normal()) same = false;
    CHECK(same);
}

TEST_CASE("distinct ids are uncorrelated and normals standard") {
    const int n = 1000000;
    SeedStream a(42, 0, StreamTag::test), b(42, 1, StreamTag::test);
    double sab = 0, sa = 0, saa = 0;
    for (int i = 0; i < n; ++i) {
        const double x = a.normal(), y = b.normal();
        sab += x * y;
        sa += x;
        saa += x * x;
    }
    CHECK(std::abs(sab / n) < 3.0 / std::sqrt(double(n)));
    const double mean = sa / n, var = saa / n - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(double(n)));
    CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniform in open unit interval") {
    SeedStream s(1, 1);
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("compensated sum") {
    std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
    CHECK(compensated_sum(xs) == 2.0);
}

TEST_CASE("slope of a constant series is zero") {
    std::vector<double> x{1, 2, 4, 8}, y{3, 3, 3, 3};
    auto f = loglog_slope(x, y);
    CHECK(f.verdict == "ok");
    CHECK(f.slope == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(f.slope_se == doctest::Approx(0.0));
}

TEST_CASE("slope of an exact power law") {
    std::vector<double> x{4, 8, 16, 32, 64}, y;
    for (double v : x) y.push_back(std::pow(v, -1.5));
    auto f = loglog_slope(x, y);
    CHECK(f.slope == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(f.slope_se < 1e-10);
    CHECK(f.ci_low <= -1.5 + 1e-9);
    CHECK(f.ci_high >= -1.5 - 1e-9);
}

TEST_CASE("fewer than three points is insufficient") {
    std::vector<double> x{1, 2}, y{1, 2};
    CHECK(loglog_slope(x, y).verdict == "insufficient");
}

TEST_CASE("standard error of the mean matches injected variance") {
    const int n = 20000;
    const double sd = 2.5;
    SeedStream s(9, 3);
    std::vector<double> xs(n);
    for (double& x : xs) x = 1.0 + sd * s.normal();
    auto e = mean_estimate(xs);
    const double analytic = sd / std::sqrt(double(n));
    CHECK(std::abs(e.se / analytic - 1.0) < 0.1);
}

TEST_CASE("jarque-bera accepts normal and rejects exponential") {
    SeedStream s(5, 5);
    std::vector<double> g(5000), e(5000);
    for (auto& x : g) x = s.normal();
    for (auto& x : e) x = -std::log(s.uniform());
    CHECK(jarque_bera(g).p_value > 0.01);
    CHECK(jarque_bera(e).p_value < 1e-6);
}
