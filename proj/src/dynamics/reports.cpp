#include <algorithm>
#include <array>
#include <cmath>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/core/parallel.hpp"
#include "kpzlab/dynamics/dynamics.hpp"
#include "kpzlab/harness/summary.hpp"

namespace kpzlab {

namespace {

// per-replica site averages of d, d^2 - m2, d^3 - m3, d^4 - m4 and d_i d_{i+1}
std::array<double, 5> site_moment_deviation(std::span<const double> u, double rho, const ThermoProfile& p) {
    CompensatedSum s1, s2, s3, s4, snn;
    const std::size_t n = u.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double d = u[i] - rho, d2 = d * d;
        s1.add(d);
        s2.add(d2);
        s3.add(d2 * d);
        s4.add(d2 * d2);
        snn.add(d * (u[(i + 1) % n] - rho));
    }
    const double inv = 1.0 / double(n);
    return {s1.value() * inv, s2.value() * inv - p.m[2], s3.value() * inv - p.m[3], s4.value() * inv - p.m[4],
            snn.value() * inv};
}

void integrate(LatticeState& s, double T, double dt, SeedStream& rng) {
    const auto steps = static_cast<long long>(std::llround(T / dt));
    for (long long k = 0; k < steps; ++k) em_step(s, dt, rng);
}

}  // namespace

StationarityReport stationarity_report(const StationarityConfig& cfg) {
    if (cfg.replicas < 2) throw UsageError("stationarity_report: need at least 2 replicas");
    TiltedMeasure mu(cfg.potential, cfg.lambda);
    const ThermoProfile prof = profile_of(mu, 4);
    const StationarySampler sampler(mu);
    const auto R = static_cast<std::size_t>(cfg.replicas);
    std::vector<std::array<double, 5>> at0(R), atT(R);
    std::array<std::vector<double>, 3> lev;
    if (cfg.richardson)
        for (auto& v : lev) v.resize(R);

    parallel_for(R, [&](std::size_t r) {
        SeedStream init(cfg.seed, r, StreamTag::stationary_init);
        SeedStream noise(cfg.seed, r, StreamTag::dynamics_noise);
        LatticeState s = sample_stationary(cfg.n_sites, sampler, cfg.potential, cfg.lambda, init);
        s.alpha = cfg.alpha;
        const LatticeState start = s;
        at0[r] = site_moment_deviation(s.u, prof.rho_prime, prof);
        integrate(s, cfg.T, cfg.dt, noise);
        atT[r] = site_moment_deviation(s.u, prof.rho_prime, prof);
        if (cfg.richardson) {
            // level k uses step dt/2^k; its increments are sums of the finest ones
            std::array<LatticeState, 3> lv{start, start, start};
            SeedStream noise2(cfg.seed, r + (std::uint64_t(1) << 40), StreamTag::dynamics_noise);
            std::array<std::vector<double>, 4> x;
            for (auto& v : x) v.resize(cfg.n_sites);
            std::vector<double> y(cfg.n_sites);
            const auto steps = static_cast<long long>(std::llround(cfg.T / cfg.dt));
            for (long long k = 0; k < steps; ++k) {
                for (auto& v : x) noise2.fill_normal(v);
                for (auto& v : x) em_step_with_noise(lv[2], cfg.dt / 4, v);
                for (int h = 0; h < 2; ++h) {
                    for (std::size_t i = 0; i < y.size(); ++i)
                        y[i] = (x[std::size_t(2 * h)][i] + x[std::size_t(2 * h + 1)][i]) * std::sqrt(0.5);
                    em_step_with_noise(lv[1], cfg.dt / 2, y);
                }
                for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.5 * (x[0][i] + x[1][i] + x[2][i] + x[3][i]);
                em_step_with_noise(lv[0], cfg.dt, y);
            }
            for (int l = 0; l < 3; ++l) lev[std::size_t(l)][r] = site_moment_deviation(lv[std::size_t(l)].u, prof.rho_prime, prof)[1];
        }
    });

    StationarityReport rep;
    static const char* names[5] = {"moment1", "moment2", "moment3", "moment4", "neighbor_cov"};
    const double targets[5] = {0.0, prof.m[2], prof.m[3], prof.m[4], 0.0};
    for (int t = 0; t < 2; ++t) {
        const auto& tab = t == 0 ? at0 : atT;
        for (int k = 0; k < 5; ++k) {
            std::vector<double> col(R);
            for (std::size_t r = 0; r < R; ++r) col[r] = tab[r][std::size_t(k)];
            const Estimate e = mean_estimate(col);
            ZCheck c;
            c.name = names[k];
            c.time = t == 0 ? 0.0 : cfg.T;
            c.target = targets[k];
            c.estimate = targets[k] + e.value;
            c.se = e.se;
            c.z = e.se > 0 ? e.value / e.se : 0.0;
            rep.max_abs_z = std::max(rep.max_abs_z, std::abs(c.z));
            if (t == 1) rep.max_abs_z_final = std::max(rep.max_abs_z_final, std::abs(c.z));
            rep.checks.push_back(c);
        }
    }
    rep.pass = rep.max_abs_z <= 3.0;
    if (cfg.richardson) {
        rep.has_bias = true;
        const Estimate a = mean_estimate(lev[0]), b = mean_estimate(lev[1]);
        rep.bias_dt = a.value;
        rep.bias_dt_se = a.se;
        rep.bias_half_dt = b.value;
        rep.bias_half_dt_se = b.se;
        std::vector<double> g0(R), g1(R), c(R);
        for (std::size_t r = 0; r < R; ++r) {
            g0[r] = lev[0][r] - lev[1][r];
            g1[r] = lev[1][r] - lev[2][r];
            c[r] = g0[r] - 2 * g1[r];
        }
        const Estimate e0 = mean_estimate(g0), e1 = mean_estimate(g1), ce = mean_estimate(c);
        rep.gap_dt = e0.value;
        rep.gap_dt_se = e0.se;
        rep.gap_half_dt = e1.value;
        rep.gap_half_dt_se = e1.se;
        rep.contrast = ce.value;
        rep.contrast_se = ce.se;
    }
    return rep;
}

double SiteObservable::operator()(std::span<const double> u, std::size_t i, double rho, const Potential& v) const {
    const std::size_t n = u.size();
    const auto j = std::size_t((long long)(i) + offset + (long long)(n) * 4) % n;
    if (vprime) return v.first(u[j]);
    return std::pow(u[j] - rho, power);
}

ReversalReport reversal_report(const ReversalConfig& cfg) {
    if (cfg.replicas < 2) throw UsageError("reversal_report: need at least 2 replicas");
    TiltedMeasure mu(cfg.potential, cfg.lambda);
    const StationarySampler sampler(mu);
    const double rho = mu.mean();
    const auto R = static_cast<std::size_t>(cfg.replicas);
    std::vector<double> fwd(R), bwd(R), diff(R);

    auto pair_average = [&](const std::vector<double>& a, const std::vector<double>& b, const SiteObservable& A,
                            const SiteObservable& B) {
        CompensatedSum s;
        for (std::size_t i = 0; i < a.size(); ++i) s.add(A(a, i, rho, cfg.potential) * B(b, i, rho, cfg.potential));
        return s.value() / double(a.size());
    };

    parallel_for(R, [&](std::size_t r) {
        SeedStream init(cfg.seed, r, StreamTag::stationary_init);
        LatticeState s0 = sample_stationary(cfg.n_sites, sampler, cfg.potential, cfg.lambda, init);
        LatticeState plus = s0, minus = s0;
        plus.alpha = cfg.alpha;
        minus.alpha = -cfg.alpha;
        // common noise for both directions
        SeedStream n1(cfg.seed, r, StreamTag::dynamics_noise), n2(cfg.seed, r, StreamTag::dynamics_noise);
        integrate(plus, cfg.T, cfg.dt, n1);
        integrate(minus, cfg.T, cfg.dt, n2);
        fwd[r] = pair_average(s0.u, plus.u, cfg.F, cfg.G);
        bwd[r] = pair_average(s0.u, minus.u, cfg.G, cfg.F);
        diff[r] = fwd[r] - bwd[r];
    });

    ReversalReport rep;
    rep.forward = mean_estimate(fwd).value;
    rep.backward = mean_estimate(bwd).value;
    const Estimate d = mean_estimate(diff);
    rep.difference = d.value;
    rep.se = d.se;
    rep.z = d.se > 0 ? d.value / d.se : 0.0;
    rep.pass = rep.difference == 0.0 || std::abs(rep.z) <= 3.0;
    return rep;
}

RefinementReport periodic_refinement_test(const RefinementConfig& cfg) {
    if (cfg.levels < 2) throw UsageError("periodic_refinement_test: need at least two levels");
    if (cfg.n_smallest % 2) throw UsageError("periodic_refinement_test: sizes must be even");
    RefinementReport rep;
    for (int k = 0; k < cfg.levels; ++k) rep.sizes.push_back(cfg.n_smallest << k);
    const std::size_t big = rep.sizes.back();
    const auto half = [](std::size_t n) { return (long long)(n / 2); };

    // lattice of size n holds sites j in [-n/2, n/2); slot = j + n/2
    SeedStream init(cfg.seed, 0, StreamTag::stationary_init);
    LatticeState full = sample_stationary(big, cfg.potential, cfg.lambda, init);
    std::vector<LatticeState> lat;
    for (std::size_t n : rep.sizes) {
        LatticeState s;
        s.potential = cfg.potential;
        s.alpha = cfg.alpha;
        s.lambda0 = cfg.lambda;
        s.u.resize(n);
        for (std::size_t i = 0; i < n; ++i) s.u[i] = full.u[std::size_t((long long)i - half(n) + half(big))];
        lat.push_back(std::move(s));
    }
    std::vector<double> sup(std::size_t(cfg.levels - 1), 0.0);
    auto measure = [&] {
        for (int k = 0; k + 1 < cfg.levels; ++k) {
            const std::size_t n = rep.sizes[std::size_t(k)];
            const LatticeState& a = lat[std::size_t(k)];
            const LatticeState& b = lat[std::size_t(k + 1)];
            std::vector<double> d(n);
            const long long off = half(rep.sizes[std::size_t(k + 1)]) - half(n);
            for (std::size_t i = 0; i < n; ++i) d[i] = a.u[i] - b.u[std::size_t((long long)i + off)];
            sup[std::size_t(k)] = std::max(sup[std::size_t(k)], weighted_norm(d, cfg.r_prime, std::size_t(half(n))));
        }
    };
    SeedStream noise(cfg.seed, 0, StreamTag::dynamics_noise);
    std::vector<double> xi(big), sub;
    const auto steps = static_cast<long long>(std::llround(cfg.T / cfg.dt));
    for (long long t = 1; t <= steps; ++t) {
        noise.fill_normal(xi);
        for (std::size_t k = 0; k < lat.size(); ++k) {
            const std::size_t n = rep.sizes[k];
            sub.resize(n);
            for (std::size_t i = 0; i < n; ++i) sub[i] = xi[std::size_t((long long)i - half(n) + half(big))];
            em_step_with_noise(lat[k], cfg.dt, sub);
        }
        if (t % cfg.check_every == 0 || t == steps) measure();
    }
    rep.sup_differences = sup;
    rep.strictly_decreasing = true;
    for (std::size_t k = 1; k < sup.size(); ++k)
        if (!(sup[k] < sup[k - 1])) rep.strictly_decreasing = false;
    return rep;
}

}  // namespace kpzlab
