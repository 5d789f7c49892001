#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kpzlab/core/errors.hpp"
#include "kpzlab/thermo/thermo.hpp"

using namespace kpzlab;

namespace {
const Potential quad = Potential::quadratic(1.0);
const Potential pert = Potential::perturbed(1.0, 0.3);
}  // namespace

TEST_CASE("gaussian partition function") {
    auto lp = log_partition(quad, 0.0);
    CHECK(lp.Z == doctest::Approx(std::sqrt(2 * std::numbers::pi)).epsilon(1e-13));
    CHECK(lp.rho == doctest::Approx(0.918938533204673).epsilon(1e-13));
    for (double lam : {-3.0, -1.0, 0.5, 2.0, 4.0})
        CHECK(std::abs(log_partition(quad, lam).rho - (lam * lam / 2 + 0.5 * std::log(2 * std::numbers::pi))) < 1e-12);
}

TEST_CASE("perturbed partition function against oracle") {
    // independent 30-digit quadrature
    auto lp = log_partition(pert, 0.5);
    CHECK(std::abs(lp.Z - 2.6493969824519034467) < 1e-12);
    CHECK(std::abs(lp.rho - 0.97433206031210392182) < 1e-12);
    auto p = moments(pert, 0.5, 4);
    CHECK(std::abs(p.rho_prime - 0.33240974223119075609) < 1e-12);
    CHECK(std::abs(p.sigma2 - 1.0734815758203165152) < 1e-12);
    CHECK(std::abs(p.m[3] - 0.19261351904515130308) < 1e-12);
    CHECK(std::abs(p.m[4] - 3.4349109530832198298) < 1e-11);
}

TEST_CASE("gaussian moments") {
    for (double lam : {-1.0, 0.0, 2.0}) {
        auto p = moments(quad, lam, 6);
        CHECK(std::abs(p.rho_prime - lam) < 1e-12);
        CHECK(std::abs(p.sigma2 - 1.0) < 1e-12);
        CHECK(std::abs(p.m[3]) < 1e-12);
        CHECK(std::abs(p.m[4] - 3.0) < 1e-11);
        CHECK(std::abs(p.m[6] - 15.0) < 1e-10);
    }
}

TEST_CASE("integration by parts identities") {
    for (const auto& v : {quad, pert, Potential::perturbed(1.0, 0.4, PerturbationShape::tanh)}) {
        for (double lam : {-1.0, 0.0, 0.5, 2.0}) {
            auto p = moments(v, lam, 4);
            CHECK(std::abs(p.mean_vprime - lam) < 1e-10);
            CHECK(std::abs(p.var_vprime - p.mean_vsecond) < 1e-10);
        }
    }
}

TEST_CASE("cumulant relations") {
    auto p = moments(pert, 0.3, 6);
    CHECK(p.kappa[2] == p.sigma2);
    CHECK(p.kappa[3] == p.m[3]);
    CHECK(std::abs(p.kappa[4] - (p.m[4] - 3 * p.sigma2 * p.sigma2)) < 1e-14);
    CHECK(p.sigma2 > 0);
}

TEST_CASE("k_max bounds") {
    CHECK_THROWS_AS(moments(quad, 0.0, 7), UsageError);
    CHECK_NOTHROW(moments(quad, 0.0, 6));
}

TEST_CASE("density normalized and non-negative") {
    TiltedMeasure mu(pert, -0.7);
    CHECK(std::abs(mu.expect([](double) { return 1.0; }) - 1.0) < 1e-14);
    for (double u = -30; u < 30; u += 0.5) CHECK(mu.density(u) >= 0.0);
    CHECK(mu.tail_mass() < 1e-14);
}

TEST_CASE("non-confining potential is a numeric error") {
    auto flat = Potential::user("flat", [](double, int) { return 0.0; });
    CHECK_THROWS_AS(TiltedMeasure(flat, 0.0), NumericError);
}

TEST_CASE("legendre inverse") {
    for (double rho : {-2.0, 0.0, 0.7, 3.0}) CHECK(std::abs(tilt_for_mean(quad, rho) - rho) < 1e-10);
    for (double lam : {-1.0, 0.0, 2.0}) {
        const double m = moments(pert, lam, 2).rho_prime;
        CHECK(std::abs(tilt_for_mean(pert, m) - lam) < 1e-9);
    }
    // 30-digit bisection oracle
    CHECK(std::abs(tilt_for_mean(pert, 0.25) - 0.42269398015154428273) < 1e-10);
}

TEST_CASE("strict convexity: mean map increasing") {
    double prev = -INFINITY;
    for (double lam = -5; lam <= 5; lam += 0.25) {
        const double m = moments(pert, lam, 2).rho_prime;
        CHECK(m > prev);
        prev = m;
    }
}

TEST_CASE("second differences of rho match sigma2") {
    const double h = 1e-3;
    for (double lam : {-1.0, 0.2, 1.7}) {
        const double r0 = log_partition(pert, lam).rho;
        const double rp = log_partition(pert, lam + h).rho, rm = log_partition(pert, lam - h).rho;
        const double rp2 = log_partition(pert, lam + 2 * h).rho, rm2 = log_partition(pert, lam - 2 * h).rho;
        // fourth-order stencil
        const double d2 = (-rp2 + 16 * rp - 30 * r0 + 16 * rm - rm2) / (12 * h * h);
        CHECK(std::abs(d2 - moments(pert, lam, 2).sigma2) < 1e-6);
    }
}

TEST_CASE("burgers coefficients") {
    auto c = burgers_coefficients(quad, 0.7);
    CHECK(c.nu == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(c.b) < 1e-12);
    CHECK(c.c_n(100) == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("chemical potential derivatives by finite differences") {
    for (double lam0 : {-0.5, 0.0, 1.0}) {
        auto c = burgers_coefficients(pert, lam0);
        auto phi = [&](double rho) { return moments(pert, tilt_for_mean(pert, rho), 2).mean_vprime; };
        const double h1 = 1e-4, h2 = 1e-3;
        const double r = c.rho_prime;
        const double d1 = (phi(r + h1) - phi(r - h1)) / (2 * h1);
        const double d2 = (phi(r + h2) - 2 * phi(r) + phi(r - h2)) / (h2 * h2);
        CHECK(std::abs(d1 - c.d_phi) < 1e-5);
        CHECK(std::abs(d2 - c.dd_phi) < 1e-4);
    }
}

TEST_CASE("hermite polynomials") {
    CHECK(hermite(3, 2.0) == 2.0);
    CHECK(hermite(4, 0.0) == 3.0);
    CHECK(hermite(6, 1.0) == 16.0);
    CHECK(hermite(0, 5.0) == 1.0);
    CHECK_THROWS_AS(hermite(7, 0.0), UsageError);
    CHECK_THROWS_AS(hermite(-1, 0.0), UsageError);
}

TEST_CASE("edgeworth density") {
    for (int N : {1, 4, 64}) CHECK(edgeworth_density(quad, 0.3, N, 0.0) == doctest::Approx(0.398942280401433).epsilon(1e-10));
    auto e = EdgeworthExpansion::of(pert, 0.0, 16);
    CHECK(std::abs(e.density(0.0) - (e.r0(0.0) + e.r2(0.0) / 16)) < 1e-15);
    // direct formula with independently computed moments
    CHECK(std::abs(edgeworth_density(pert, 0.0, 16, 0.5) - 0.34849839629624757101) < 1e-11);
}

TEST_CASE("edgeworth corrections integrate to zero") {
    auto e = EdgeworthExpansion::of(pert, 0.5, 8);
    const double h = 1e-3;
    double s0 = 0, s1 = 0, s2 = 0;
    for (double z = -12; z <= 12; z += h) {
        s0 += e.r0(z) * h;
        s1 += e.r1(z) * h;
        s2 += e.r2(z) * h;
    }
    CHECK(std::abs(s0 - 1) < 1e-8);
    CHECK(std::abs(s1) < 1e-8);
    CHECK(std::abs(s2) < 1e-8);
}

TEST_CASE("uniform bounds over a finite window") {
    std::vector<double> lams;
    for (double l = -5; l <= 5; l += 0.5) lams.push_back(l);
    auto b = uniform_bound_probe(pert, lams);
    CHECK(b.all_finite);
    CHECK(b.max_skew < 1.0);
    CHECK(b.max_kurt < 10.0);
    CHECK(b.max_inv_sigma2 < 10.0);
}
