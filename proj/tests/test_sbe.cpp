#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "kpzlab/core/errors.hpp"
#include "kpzlab/sbe/sbe.hpp"

using namespace kpzlab;
using cplx = std::complex<double>;

namespace {
SbeParams base(double b = 0.0, std::size_t K = 16) {
    SbeParams p;
    p.nu = 0.4;
    p.b = b;
    p.L = 4.0;
    p.K = K;
    p.delta = 0.25;
    p.dt = 1e-3;
    return p;
}

cplx field_at(const SpectralState& s, double L, double x) {
    // full sum over -K..K with the stored negative modes conjugated
    cplx acc = s.modes[0];
    for (std::size_t k = 1; k < s.modes.size(); ++k) {
        const double q = 2 * std::numbers::pi * double(k) / L;
        acc += s.modes[k] * std::exp(cplx(0, q * x)) + std::conj(s.modes[k]) * std::exp(cplx(0, -q * x));
    }
    return acc;
}
}  // namespace

TEST_CASE("white initial spectrum and real field") {
    const auto p = base();
    std::vector<std::vector<double>> e(p.K + 1);
    for (std::uint64_t r = 0; r < 10000; ++r) {
        SeedStream rng(1, r, StreamTag::test);
        const auto s = sample_white_initial(p, rng);
        CHECK(s.modes[0] == cplx(0, 0));
        for (std::size_t k = 1; k <= p.K; ++k) e[k].push_back(std::norm(s.modes[k]));
    }
    for (std::size_t k : {1, 5, 16}) {
        const auto m = mean_estimate(e[k]);
        CHECK(std::abs(m.value - p.sigma2() / p.L) < 3 * m.se);
    }
    SeedStream rng(2, 0, StreamTag::test);
    const auto s = sample_white_initial(p, rng);
    SbeSolver solver(p);
    const auto grid = solver.real_field(s);
    for (std::size_t j = 0; j < grid.size(); j += 7) {
        const cplx v = field_at(s, p.L, p.L * double(j) / double(grid.size()));
        CHECK(std::abs(v.imag()) < 1e-12);
        CHECK(std::abs(v.real() - grid[j]) < 1e-12);
    }
}

TEST_CASE("pairing is Parseval against the continuum norm") {
    auto p = base(0.0, 256);
    p.L = 8.0;
    const auto eta = TestFunction::gaussian(1.0, 0.3);
    const auto w = pairing_weights(p, eta);
    double var = 0;
    for (std::size_t k = 1; k <= p.K; ++k) var += 2 * p.sigma2() / p.L * std::norm(w[k]);
    // the missing k = 0 term is sigma2/L (int eta)^2
    const double k0 = p.sigma2() / p.L * std::norm(eta.fourier(0));
    CHECK(var + k0 == doctest::Approx(p.sigma2() * eta.l2_norm2()).epsilon(1e-10));

    p = base(0.0, 32);
    const auto w2 = pairing_weights(p, eta);
    std::vector<double> x;
    for (std::uint64_t r = 0; r < 8000; ++r) {
        SeedStream rng(3, r, StreamTag::test);
        x.push_back(pair(sample_white_initial(p, rng), w2));
    }
    double target = 0;
    for (std::size_t k = 1; k <= p.K; ++k) target += 2 * p.sigma2() / p.L * std::norm(w2[k]);
    const auto v = variance_estimate(x);
    CHECK(std::abs(v.value - target) < 3 * v.se);
}

TEST_CASE("b = 0 step is the exact OU transition") {
    const auto p = base();
    SbeSolver solver(p);
    SeedStream rng(4, 0, StreamTag::test);
    auto s = sample_white_initial(p, rng);
    const auto s0 = s;
    solver.step(s, nullptr);
    for (std::size_t k = 1; k <= p.K; ++k) {
        const double q = p.q(k);
        const cplx ex = std::exp(-p.nu * q * q * p.dt) * s0.modes[k];
        CHECK(std::abs(s.modes[k] - ex) < 1e-12 * std::max(1.0, std::abs(ex)));
    }
    // variance of the increment from zero
    std::vector<std::vector<double>> e(p.K + 1);
    for (std::uint64_t r = 0; r < 20000; ++r) {
        SpectralState z;
        z.modes.assign(p.K + 1, cplx(0, 0));
        SeedStream n(5, r, StreamTag::test);
        solver.step(z, &n);
        for (std::size_t k : {1, 8, 16}) e[k].push_back(std::norm(z.modes[k]));
    }
    for (std::size_t k : {1, 8, 16}) {
        const double a = p.nu * p.q(k) * p.q(k);
        const double target = -std::expm1(-2 * a * p.dt) / (2 * p.nu * p.L);
        const auto m = mean_estimate(e[k]);
        CHECK(std::abs(m.value - target) < 3 * m.se);
    }
}

TEST_CASE("mean mode is conserved and the dealiased nonlinearity is the exact convolution") {
    auto p = base(0.8, 8);
    SbeSolver solver(p);
    SeedStream rng(6, 0, StreamTag::test);
    auto s = sample_white_initial(p, rng);
    s.modes[0] = 0.3;
    for (int i = 0; i < 200; ++i) solver.step(s, nullptr);
    CHECK(s.modes[0] == cplx(0.3, 0));
    for (int i = 0; i < 200; ++i) solver.step(s, &rng);
    CHECK(s.modes[0] == cplx(0.3, 0));

    // oracle: (u_delta^2)_k = sum_l w_l w_{k-l}, |l|, |k-l| <= K
    const long long K = (long long)p.K;
    auto w = [&](long long l) {
        const cplx m = mollifier_symbol(2 * std::numbers::pi * double(l) / p.L, p.delta);
        const cplx u = l >= 0 ? s.modes[std::size_t(l)] : std::conj(s.modes[std::size_t(-l)]);
        return u * m;
    };
    std::vector<cplx> nl(p.K + 1);
    solver.nonlinear_term(s, nl);
    for (long long k = 1; k <= K; ++k) {
        cplx c = 0;
        for (long long l = -K; l <= K; ++l)
            if (std::abs(k - l) <= K) c += w(l) * w(k - l);
        const cplx ex = -p.b * cplx(0, p.q(std::size_t(k))) * c;
        CHECK(std::abs(nl[std::size_t(k)] - ex) < 1e-12);
    }
    CHECK(mollifier_symbol(0.0, 0.3) == cplx(1, 0));
    CHECK(std::abs(mollifier_symbol(2.0, 0.5) - (std::exp(cplx(0, 1.0)) - 1.0) / cplx(0, 1.0)) < 1e-15);
}

TEST_CASE("deterministic viscous Burgers matches a 4x finer self-run") {
    auto run = [](std::size_t K) {
        SbeParams p;
        p.nu = 0.5;
        p.b = 1.0;
        p.L = 2 * std::numbers::pi;
        p.K = K;
        p.delta = 0.1;
        p.dt = 1e-4;
        SbeSolver solver(p);
        SpectralState s;
        s.modes.assign(K + 1, cplx(0, 0));
        s.modes[1] = cplx(0, -0.5);   // sin x
        s.modes[2] = cplx(0.25, 0);   // 0.5 cos 2x
        for (int i = 0; i < 1000; ++i) solver.step(s, nullptr);
        return s;
    };
    const auto a = run(32), b = run(128);
    CHECK(l2_distance(a, b, 2 * std::numbers::pi) < 1e-5);
    CHECK(l2_distance(a, run(33), 2 * std::numbers::pi) > 0);
}

TEST_CASE("b = 0 spectrum is flat without burn-in") {
    SpectrumConfig c;
    c.params = base(0.0, 16);
    c.burn_in = 0;
    c.samples = 20;
    c.sample_every = 20;
    c.replicas = 200;
    c.seed = 3;
    const auto rep = stationary_spectrum_check(c);
    CHECK(rep.exact_case);
    CHECK(rep.modes.size() == 16);
    CHECK(rep.max_abs_z < 4.0);
    CHECK(rep.max_relative_deviation < 0.1);

    c.params.b = 0.1;
    const auto nb = stationary_spectrum_check(c);
    CHECK_FALSE(nb.exact_case);
    CHECK_FALSE(nb.pass);
}

TEST_CASE("low-mode spectrum is insensitive to halving delta") {
    SpectrumConfig c;
    // one-sided mollifier: keep b delta sup|u_delta| well under nu
    c.params = base(0.15, 32);
    c.params.delta = 0.25;
    c.burn_in = 200;
    c.samples = 20;
    c.sample_every = 20;
    c.replicas = 100;
    const auto a = stationary_spectrum_check(c);
    c.params.delta = 0.125;
    const auto b = stationary_spectrum_check(c);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto& x = a.modes[k].energy;
        const auto& y = b.modes[k].energy;
        CHECK(std::abs(x.value - y.value) < 4 * std::hypot(x.se, y.se));
    }
}

TEST_CASE("b = 0 two-point function against the OU covariance") {
    SbeCorrelationConfig c;
    c.params = base(0.0, 32);
    c.params.dt = 5e-3;
    c.bases = {TestFunction::gaussian(1.0, 0.3)};
    c.offsets = {0.0, 0.3};
    c.lag_records = {0, 4};
    c.records = 40;
    c.record_every = 5;
    c.replicas = 400;
    const auto cells = sbe_two_point(c);
    REQUIRE(cells.size() == 4);
    for (const auto& cell : cells) {
        const double ex = ou_two_point(c.params, c.bases[0], cell.x, cell.t);
        CHECK(cell.value.value == doctest::Approx(ex).epsilon(0.05));
    }
    CHECK(cells[2].t == doctest::Approx(0.1));
}

TEST_CASE("comparison counts overlapping cells") {
    std::vector<CorrelationCell> a(5), b(5);
    for (std::size_t i = 0; i < 5; ++i) {
        a[i].x = b[i].x = 0.1 * double(i);
        a[i].value = {1.0, 0.1, false};
        b[i].value = {1.0 + (i == 4 ? 1.0 : 0.2), 0.1, false};
    }
    const auto c = compare_correlations(a, b);
    CHECK(c.overlapping == 4);
    CHECK(c.pass);
    b[3].value.value = 5;
    CHECK_FALSE(compare_correlations(a, b).pass);
}

TEST_CASE("invalid parameters") {
    auto p = base(0.0, 16);
    p.delta = 0.01;
    CHECK_THROWS_AS(validate(p), UsageError);
    p = base(5.0, 16);
    p.dt = 1.0;
    CHECK_THROWS_AS(SbeSolver{p}, UsageError);
    CHECK(std::isinf(stability_dt(base())));
}
