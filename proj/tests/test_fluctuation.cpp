#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kpzlab/core/errors.hpp"
#include "kpzlab/fluctuation/fluctuation.hpp"

using namespace kpzlab;

namespace {
const Potential quad = Potential::quadratic(1.0);
const Potential pert = Potential::perturbed(1.0, 0.3);

double he(int k, double y) {
    // probabilists' Hermite, written out
    switch (k) {
        case 0: return 1;
        case 1: return y;
        case 2: return y * y - 1;
        case 3: return y * y * y - 3 * y;
        case 4: return y * y * y * y - 6 * y * y + 3;
        case 5: return y * y * y * y * y - 10 * y * y * y + 15 * y;
        default: return y * y * y * y * y * y - 15 * y * y * y * y + 45 * y * y - 15;
    }
}

double quad_inf(const std::function<double(double)>& f) {
    using boost::math::quadrature::gauss_kronrod;
    return gauss_kronrod<double, 61>::integrate(f, -20.0, 20.0, 15, 1e-13);
}

ScalingConfig small_config(const Potential& v) {
    ScalingConfig c;
    c.potential = v;
    c.n = 8;
    c.T = 0.05;
    c.dt = 0.02;
    c.replicas = 4;
    c.records = 10;
    c.deltas = {0.5, 1.0};
    c.etas = {TestFunction::gaussian(0.0, 0.25), TestFunction::hermite(0.1, 0.3, 1)};
    c.seed = 5;
    return c;
}
}  // namespace

TEST_CASE("hermite test functions: norms and transform against quadrature") {
    for (int k = 0; k <= 4; ++k) {
        const double c = 0.3, w = 0.4;
        const auto eta = TestFunction::hermite(c, w, k);
        auto e = [&](double x) { const double y = (x - c) / w; return he(k, y) * std::exp(-0.5 * y * y); };
        auto d1 = [&](double x) { const double y = (x - c) / w; return -he(k + 1, y) * std::exp(-0.5 * y * y) / w; };
        auto d2 = [&](double x) { const double y = (x - c) / w; return he(k + 2, y) * std::exp(-0.5 * y * y) / (w * w); };
        for (double x : {-0.7, 0.1, 0.3, 1.2}) {
            CHECK(eta.value(x) == doctest::Approx(e(x)).epsilon(1e-12));
            CHECK(eta.grad(x) == doctest::Approx(d1(x)).epsilon(1e-12));
            CHECK(eta.lap(x) == doctest::Approx(d2(x)).epsilon(1e-12));
        }
        CHECK(eta.l2_norm2() == doctest::Approx(quad_inf([&](double x) { return e(x) * e(x); })).epsilon(1e-10));
        CHECK(eta.grad_l2_norm2() == doctest::Approx(quad_inf([&](double x) { return d1(x) * d1(x); })).epsilon(1e-10));
        CHECK(eta.lap_l2_norm2() == doctest::Approx(quad_inf([&](double x) { return d2(x) * d2(x); })).epsilon(1e-10));
        for (double q : {0.0, 1.5, 4.0}) {
            const double re = quad_inf([&](double x) { return e(x) * std::cos(q * x); });
            const double im = -quad_inf([&](double x) { return e(x) * std::sin(q * x); });
            const auto f = eta.fourier(q);
            CHECK(std::abs(f.real() - re) < 1e-10);
            CHECK(std::abs(f.imag() - im) < 1e-10);
        }
        const double H = eta.support_half_width(1e-18);
        CHECK(std::abs(e(c + H)) < 1e-17);
    }
    CHECK_THROWS_AS(TestFunction::hermite(0, 1, 5), UsageError);
    CHECK_THROWS_AS(TestFunction::gaussian(0, 0), UsageError);
    const auto a = TestFunction::gaussian(-3, 0.2), b = TestFunction::gaussian(3, 0.2);
    CHECK(std::abs(inner_product(a, b)) < 1e-30);
}

TEST_CASE("field of the flat profile vanishes and a single bump is picked out") {
    const auto bc = burgers_coefficients(pert, 0.4);
    const auto g = frame_geometry(16, bc, 256);
    const auto eta = TestFunction::gaussian(0.0, 0.25);
    std::vector<double> u(256, bc.rho_prime);
    CHECK(field_eval(u, eta, g, 0.03) == 0.0);
    u[3] += 1.0;
    for (double t : {0.0, 0.01, 0.05}) {
        double x = 3.0 / 16 + g.c_n * t;
        CHECK(field_eval(u, eta, g, t) == doctest::Approx(eta(x) / 4.0).epsilon(1e-12));
    }
    // the wrap takes site N-1 to just left of 0
    std::fill(u.begin(), u.end(), bc.rho_prime);
    u[255] += 1.0;
    CHECK(field_eval(u, eta, g, 0.0) == doctest::Approx(eta(-1.0 / 16) / 4.0).epsilon(1e-12));
}

TEST_CASE("field is linear in the test function") {
    const auto bc = burgers_coefficients(pert, 0.0);
    const auto g = frame_geometry(16, bc, 512);
    SeedStream rng(3, 0, StreamTag::test);
    auto s = sample_stationary(512, pert, 0.0, rng);
    const auto a = TestFunction::gaussian(0.0, 0.25), b = TestFunction::hermite(0.5, 0.3, 2);
    const double t = 0.02;
    const double lhs = field_eval(s.u, [&](double x) { return 2 * a(x) - 0.5 * b(x); }, g, t, 0.25);
    CHECK(lhs == doctest::Approx(2 * field_eval(s.u, a, g, t) - 0.5 * field_eval(s.u, b, g, t)).epsilon(1e-12));
}

TEST_CASE("stationary field variance matches the lattice sum") {
    const auto bc = burgers_coefficients(pert, 0.0);
    const auto g = frame_geometry(8, bc, 64);
    const auto eta = TestFunction::gaussian(0.0, 0.5);
    TiltedMeasure mu(pert, 0.0);
    StationarySampler sampler(mu);
    std::vector<double> x(6000);
    for (std::size_t r = 0; r < x.size(); ++r) {
        SeedStream rng(11, r, StreamTag::test);
        auto s = sample_stationary(64, sampler, pert, 0.0, rng);
        x[r] = field_eval(s.u, eta, g, 0.0);
    }
    const auto v = variance_estimate(x);
    CHECK(std::abs(v.value - field_variance_exact(eta, g, 0.0, bc.sigma2)) < 3 * v.se);
    CHECK(field_variance_exact(eta, g, 0.0, bc.sigma2) ==
          doctest::Approx(bc.sigma2 * eta.l2_norm2()).epsilon(1e-9));
}

TEST_CASE("quadratic block field") {
    std::vector<double> u(10, 0.25);
    CHECK(quadratic_field(u, 3, 4, 0.25, 2.0) == doctest::Approx(-0.5));
    u = {1, 2, 3, 4, 5};
    CHECK(quadratic_field(u, 3, 3, 0.0, 0.0) == doctest::Approx(std::pow((4 + 5 + 1) / 3.0, 2)));

    TiltedMeasure mu(pert, 0.3);
    StationarySampler sampler(mu);
    const double sigma2 = mu.sigma2();
    std::vector<double> q(20000);
    for (std::size_t r = 0; r < q.size(); ++r) {
        SeedStream rng(12, r, StreamTag::test);
        auto s = sample_stationary(8, sampler, pert, 0.3, rng);
        q[r] = quadratic_field(s.u, 0, 8, mu.mean(), sigma2);
    }
    const auto m = mean_estimate(q);
    CHECK(std::abs(m.value) < 3 * m.se);
}

TEST_CASE("decomposition identity, nonlinearity identity and QV accumulator") {
    auto cfg = small_config(pert);
    const auto run = run_scaling(cfg);
    REQUIRE(run.replicas.size() == 4);
    REQUIRE(run.times.size() == 11);
    const auto sp = split_report(run);
    CHECK(sp.max_split_error <= 1e-10);
    CHECK(sp.max_nl_identity_error <= 1e-9);

    const auto& es = run.replicas[0].etas[0];
    CHECK(es.S[0] == 0.0);
    CHECK(es.v.size() == run.times.size());
    for (std::size_t k = 0; k < es.v.size(); ++k)
        CHECK(std::abs(es.v[k] - es.v[0] - es.S[k] - es.A[k] - es.M[k]) < 1e-9);

    // QV accumulator: left-point time sum of n^{-1} sum_j (n(eta(x_{j+1}) - eta(x_j)))^2
    const auto& eta = cfg.etas[0];
    const auto& g = run.geometry;
    auto rate = [&](double t) {
        double s = 0;
        for (long long j = -200; j <= 200; ++j) {
            const double d = g.n * (eta(double(j + 1) / g.n + g.c_n * t) - eta(double(j) / g.n + g.c_n * t));
            s += d * d;
        }
        return s / g.n;
    };
    using boost::math::quadrature::gauss_kronrod;
    const double T = run.times.back();
    const double oracle = gauss_kronrod<double, 31>::integrate(rate, 0.0, T, 10, 1e-12);
    CHECK(es.qv.back() == doctest::Approx(oracle).epsilon(1e-6));
    const auto qr = martingale_qv_report(run, 0);
    CHECK(qr.target == doctest::Approx(T * eta.grad_l2_norm2()));
}

TEST_CASE("quadratic potential has exactly vanishing BG residuals") {
    auto cfg = small_config(quad);
    const auto run = run_scaling(cfg);
    const auto r1 = bg1_residual(run, 0);
    CHECK(r1.exact_zero);
    CHECK(r1.second_moment.value == 0.0);
    for (std::size_t d = 0; d < 2; ++d) {
        const auto r2 = bg2_residual(run, 1, d);
        CHECK(r2.exact_zero);
        CHECK(r2.bound == 0.0);  // var(V' - a u) vanishes
    }
    const auto er = energy_residual(run, 0, 0);
    CHECK(er.coefficient == 0.0);

    auto pcfg = small_config(pert);
    const auto prun = run_scaling(pcfg);
    const auto p1 = bg1_residual(prun, 0);
    CHECK_FALSE(p1.exact_zero);
    CHECK(p1.second_moment.value > 0);
    CHECK(std::isfinite(p1.ratio));
}

TEST_CASE("scaling runs are deterministic and replicas independent of worker count") {
    auto cfg = small_config(pert);
    cfg.replicas = 2;
    const auto setup = prepare_scaling(cfg);
    const auto a = run_scaling_replica(setup, 1);
    const auto b = run_scaling_replica(setup, 1);
    CHECK(a.etas[0].v == b.etas[0].v);
    CHECK(a.etas[1].A == b.etas[1].A);
    const auto full = run_scaling(cfg);
    CHECK(full.replicas[1].etas[0].M == a.etas[0].M);
}

TEST_CASE("bad scaling configs are rejected") {
    auto cfg = small_config(pert);
    cfg.deltas = {0.3};
    CHECK_THROWS_AS(prepare_scaling(cfg), UsageError);
    cfg = small_config(pert);
    cfg.n_sites = 16;
    CHECK_THROWS_AS(prepare_scaling(cfg), UsageError);
    cfg = small_config(pert);
    cfg.T = 0;
    CHECK_THROWS_AS(prepare_scaling(cfg), UsageError);
}

TEST_CASE("russo-vallois quadratic variation") {
    std::vector<double> c(101, 2.5);
    const double d[] = {0.01, 0.02, 0.05};
    for (double q : russo_vallois_qv(c, 0.01, d)) CHECK(q == 0.0);

    std::vector<double> lin(101);
    for (std::size_t k = 0; k < lin.size(); ++k) lin[k] = 3.0 * 0.01 * double(k);
    const auto q = russo_vallois_qv(lin, 0.01, d);
    // (3 d)^2 / d over a horizon of 0.95
    for (std::size_t i = 0; i < 3; ++i) CHECK(q[i] == doctest::Approx(9 * d[i] * 0.95));

    // Brownian path: QV close to the horizon
    SeedStream rng(2, 0, StreamTag::test);
    std::vector<double> w(20001, 0.0);
    for (std::size_t k = 1; k < w.size(); ++k) w[k] = w[k - 1] + std::sqrt(1e-4) * rng.normal();
    const double dd[] = {1e-4, 1e-3};
    for (double v : russo_vallois_qv(w, 1e-4, dd)) CHECK(v == doctest::Approx(1.99).epsilon(0.1));

    const double bad[] = {0.015};
    CHECK_THROWS_AS(russo_vallois_qv(c, 0.01, bad), UsageError);
}

TEST_CASE("white noise statistics on synthetic samples") {
    const auto bc = burgers_coefficients(quad, 0.0);
    const auto g = frame_geometry(16, bc, 256);
    const std::vector<TestFunction> etas{TestFunction::gaussian(-1, 0.2), TestFunction::gaussian(1, 0.2)};
    std::vector<std::vector<double>> s(2, std::vector<double>(4000));
    SeedStream rng(8, 0, StreamTag::test);
    for (auto& v : s)
        for (double& x : v) x = std::sqrt(etas[0].l2_norm2()) * rng.normal();
    const auto st = white_noise_stats(s, etas, 1.0, g, 0.0, {{0, 1}});
    REQUIRE(st.marginals.size() == 2);
    for (const auto& m : st.marginals) {
        CHECK(std::abs(m.ratio.value - 1) < 3 * m.ratio.se);
        CHECK(m.normality.p_value > 0.01);
    }
    REQUIRE(st.pairs.size() == 1);
    CHECK(st.pairs[0].target == doctest::Approx(std::sqrt(std::numbers::pi) * 0.2 * std::exp(-25.0)).epsilon(1e-6));
    CHECK(std::abs(st.pairs[0].z) < 3.5);
}

TEST_CASE("two-point correlation at lag 0 and offset 0 is the mean square") {
    auto cfg = small_config(quad);
    cfg.probes = {TestFunction::gaussian(0, 0.25), TestFunction::gaussian(0.5, 0.25)};
    cfg.replicas = 3;
    const auto run = run_scaling(cfg);
    const double offs[] = {0.0, 0.5};
    const int lags[] = {0, 2};
    const auto cells = micro_two_point(run, 1, offs, lags);
    REQUIRE(cells.size() == 4);
    double s = 0;
    for (const auto& tr : run.replicas) {
        double t = 0;
        for (double x : tr.probes[0]) t += x * x;
        s += t / double(tr.probes[0].size());
    }
    CHECK(cells[0].value.value == doctest::Approx(s / 3));
    CHECK(cells[2].t == doctest::Approx(run.times[2]));
}
