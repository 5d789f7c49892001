#include <cmath>

#include "doctest.h"
#include "kpzlab/core/errors.hpp"
#include "kpzlab/potentials/potential.hpp"

using namespace kpzlab;

TEST_CASE("quadratic evaluations") {
    auto v = Potential::quadratic(1.0);
    CHECK(eval(v, 2.0, 0) == 2.0);
    CHECK(eval(v, 2.0, 1) == 2.0);
    CHECK(eval(v, 2.0, 2) == 1.0);
    for (double u : {0.1, 0.7, 3.0, 11.5}) CHECK(eval(v, -u, 1) == -eval(v, u, 1));
}

TEST_CASE("perturbed sine at zero") {
    auto v = Potential::perturbed(1.0, 0.3);
    CHECK(eval(v, 0.0, 1) == doctest::Approx(0.3).epsilon(1e-15));
}

TEST_CASE("unsupported order") {
    auto v = Potential::quadratic();
    CHECK_THROWS_AS(eval(v, 1.0, 3), UsageError);
    CHECK_THROWS_AS(eval(v, 1.0, -1), UsageError);
}

TEST_CASE("finite differences match closed forms") {
    const double h = 1e-5;
    for (auto v : {Potential::quadratic(1.0), Potential::quadratic(2.5), Potential::perturbed(1.0, 0.3),
                   Potential::perturbed(1.5, 0.4, PerturbationShape::tanh)}) {
        for (double u = -10; u <= 10; u += 0.37) {
            const double d1 = (eval(v, u + h, 0) - eval(v, u - h, 0)) / (2 * h);
            const double d2 = (eval(v, u + h, 1) - eval(v, u - h, 1)) / (2 * h);
            CHECK(std::abs(d1 - eval(v, u, 1)) <= 1e-6 * std::max(1.0, std::abs(eval(v, u, 1))));
            CHECK(std::abs(d2 - eval(v, u, 2)) <= 1e-6 * std::max(1.0, std::abs(eval(v, u, 2))));
            const double d3 = (eval(v, u + h, 2) - eval(v, u - h, 2)) / (2 * h);
            CHECK(std::abs(d3 - v.third(u)) <= 1e-6);
        }
    }
}

TEST_CASE("batch first derivative agrees with scalar") {
    auto v = Potential::perturbed(1.0, 0.3);
    std::vector<double> u{-3, -0.5, 0, 0.25, 7}, out(5);
    v.first_batch(u, out);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(out[i] == v.first(u[i]));
}

TEST_CASE("validation: quadratic") {
    auto probe = default_probe_grid();
    auto r = validate_assumption_v(Potential::quadratic(1.0), probe);
    CHECK(r.pass);
    CHECK(r.C == 1.0);
    CHECK(r.lipschitz == 1.0);
}

TEST_CASE("validation: perturbed sine") {
    auto probe = default_probe_grid();
    auto r = validate_assumption_v(Potential::perturbed(1.0, 0.3), probe);
    CHECK(r.pass);
    CHECK(r.C == 1.0);
    CHECK(r.sup_ddpsi == doctest::Approx(0.3).epsilon(1e-4));
    CHECK(r.lipschitz == doctest::Approx(1.3).epsilon(1e-4));
}

TEST_CASE("validation: quartic fails") {
    auto quartic = Potential::user("u^4", [](double u, int k) {
        return k == 0 ? u * u * u * u : k == 1 ? 4 * u * u * u : 12 * u * u;
    });
    auto r = validate_assumption_v(quartic, default_probe_grid());
    CHECK_FALSE(r.pass);
    CHECK(r.max_convex_curvature > 1e3);
}

TEST_CASE("validation: non-finite value reports point") {
    auto bad = Potential::user("log", [](double u, int k) {
        return k == 0 ? u * u / 2 : k == 1 ? u : (u > 5 ? NAN : 1.0);
    });
    auto r = validate_assumption_v(bad, default_probe_grid());
    CHECK_FALSE(r.pass);
    REQUIRE(r.offending_point.has_value());
    CHECK(*r.offending_point > 5.0);
}

TEST_CASE("validation: probe preconditions") {
    std::vector<double> empty;
    CHECK_THROWS_AS(validate_assumption_v(Potential::quadratic(), empty), UsageError);
    auto narrow = default_probe_grid(5.0);
    CHECK_THROWS_AS(validate_assumption_v(Potential::quadratic(), narrow), UsageError);
}

TEST_CASE("validation is deterministic") {
    auto probe = default_probe_grid();
    auto v = Potential::perturbed(1.0, 0.3, PerturbationShape::tanh);
    auto a = validate_assumption_v(v, probe), b = validate_assumption_v(v, probe);
    CHECK(a.pass == b.pass);
    CHECK(a.C == b.C);
    CHECK(a.sup_psi == b.sup_psi);
    CHECK(a.sup_dpsi == b.sup_dpsi);
    CHECK(a.sup_ddpsi == b.sup_ddpsi);
    CHECK(a.lipschitz == b.lipschitz);
}
