#include <algorithm>
#include <array>
#include <cmath>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/ensembles/ensembles.hpp"
#include "kpzlab/harness/summary.hpp"

namespace kpzlab {

void LocalObservable::grad(std::span<const double> u, std::span<double> out) const {
    if (gradient) {
        gradient(u, out);
        return;
    }
    std::vector<double> w(u.begin(), u.end());
    const double h = 1e-6;
    for (std::size_t i = 0; i < u.size(); ++i) {
        w[i] = u[i] + h;
        const double fp = value(w);
        w[i] = u[i] - h;
        const double fm = value(w);
        w[i] = u[i];
        out[i] = (fp - fm) / (2 * h);
    }
}

LocalObservable observable_u0() {
    return {1, [](std::span<const double> u) { return u[0]; },
            [](std::span<const double>, std::span<double> g) {
                std::fill(g.begin(), g.end(), 0.0);
                g[0] = 1.0;
            }};
}

LocalObservable observable_u0_squared() {
    return {1, [](std::span<const double> u) { return u[0] * u[0]; },
            [](std::span<const double> u, std::span<double> g) {
                std::fill(g.begin(), g.end(), 0.0);
                g[0] = 2 * u[0];
            }};
}

LocalObservable observable_vprime(const Potential& v) {
    return {1, [v](std::span<const double> u) { return v.first(u[0]); },
            [v](std::span<const double> u, std::span<double> g) {
                std::fill(g.begin(), g.end(), 0.0);
                g[0] = v.second(u[0]);
            }};
}

namespace {

// Grids aligned so that for r = origin + i h / N every needed convolution value sits on a node.
struct CanonicalKernel {
    int ell = 1;
    int N = 2;
    GridDensity p;
    GridDensity q;  // (N - ell)-fold
    std::vector<double> f1;
    std::vector<double> f2;  // row-major M x M
    std::size_t lo = 0, hi = 0;  // indices where p is non-negligible

    CanonicalKernel(const LocalObservable& F, int ell_, int N_, const TiltedMeasure& mu, double anchor,
                    double spacing, double half_width)
        : ell(ell_), N(N_) {
        p = single_site_grid(mu, GridOptions{spacing, half_width, anchor});
        q = convolution_power(p, N - ell);
        const double peak = *std::max_element(p.values.begin(), p.values.end());
        lo = 0;
        hi = p.size();
        while (lo < hi && p.values[lo] < 1e-30 * peak) ++lo;
        while (hi > lo && p.values[hi - 1] < 1e-30 * peak) --hi;
        const std::size_t m = p.size();
        if (ell == 1) {
            f1.resize(m);
            for (std::size_t j = lo; j < hi; ++j) {
                const double x = p.x(j);
                f1[j] = F(std::span<const double>(&x, 1));
            }
        } else {
            f2.assign(m * m, 0.0);
            std::array<double, 2> u{};
            for (std::size_t i = lo; i < hi; ++i)
                for (std::size_t j = lo; j < hi; ++j) {
                    u = {p.x(i), p.x(j)};
                    f2[i * m + j] = F(u);
                }
        }
    }

    // index i of N r relative to N*origin, in units of h
    std::pair<double, double> num_den(long long i) const {
        double num = 0, den = 0;
        const auto qs = static_cast<long long>(q.size());
        if (ell == 1) {
            for (std::size_t j = lo; j < hi; ++j) {
                const long long k = i - static_cast<long long>(j);
                if (k < 0 || k >= qs) continue;
                const double w = p.values[j] * q.values[std::size_t(k)];
                num += w * f1[j];
                den += w;
            }
        } else {
            const std::size_t m = p.size();
            for (std::size_t a = lo; a < hi; ++a) {
                double inner_num = 0, inner_den = 0;
                for (std::size_t b = lo; b < hi; ++b) {
                    const long long k = i - static_cast<long long>(a + b);
                    if (k < 0 || k >= qs) continue;
                    const double w = p.values[b] * q.values[std::size_t(k)];
                    inner_num += w * f2[a * m + b];
                    inner_den += w;
                }
                num += p.values[a] * inner_num;
                den += p.values[a] * inner_den;
            }
        }
        return {num, den};
    }

    double psi(long long i) const {
        const auto [num, den] = num_den(i);
        if (!(den * std::pow(p.spacing, ell) >= 1e-300))
            throw OutOfRangeError("canonical expectation: p^{*N}(N rho) below 1e-300; rho out of range");
        return num / den;
    }

    long long index_of(double rho) const { return std::llround(double(N) * (rho - p.origin) / p.spacing); }
};

void check_canonical(int ell, int N, int sites) {
    if (ell != 1 && ell != 2) throw UsageError("canonical expectation: ell must be 1 or 2");
    if (sites != ell) throw UsageError("canonical expectation: observable support differs from ell");
    if (2 * ell > N) throw UsageError("canonical expectation: need ell <= N/2");
}

double default_spacing(int ell, const CanonicalOptions& opts) {
    return opts.spacing_sigmas.value_or(ell == 1 ? 1e-3 : 2e-2);
}

}  // namespace

double canonical_expectation(const LocalObservable& F, const CanonicalSpec& spec, int N, const Potential& v,
                             double lambda0, const CanonicalOptions& opts) {
    check_canonical(spec.ell, N, F.sites);
    (void)lambda0;  // the canonical law is tilt independent; tilt at h'(rho) keeps N rho at the peak
    TiltedMeasure mu(v, opts.tilt ? *opts.tilt : tilt_for_mean(v, spec.rho));
    CanonicalKernel k(F, spec.ell, N, mu, spec.rho, default_spacing(spec.ell, opts), opts.half_width_sigmas);
    return k.psi(k.index_of(spec.rho));
}

GrandCanonicalExpansion grand_canonical_expansion(const LocalObservable& F, const Potential& v, double lambda) {
    if (F.sites != 1 && F.sites != 2) throw UsageError("grand canonical expansion: 1 or 2 sites");
    TiltedMeasure mu(v, lambda);
    const ThermoProfile prof = profile_of(mu, 4);
    GrandCanonicalExpansion g;
    g.rho = prof.rho_prime;
    g.sigma2 = prof.sigma2;
    g.m3 = prof.m[3];
    const double r = g.rho;
    const int ell = F.sites;
    if (ell == 1) {
        auto f = [&](double x) { return F(std::span<const double>(&x, 1)); };
        g.phi = mu.expect(f);
        g.e_f_dev = mu.expect([&](double x) { return f(x) * (x - r); });
        g.e_f_dev2 = mu.expect([&](double x) { return f(x) * (x - r) * (x - r); });
    } else {
        auto f = [&](double x, double y) {
            const std::array<double, 2> u{x, y};
            return F(u);
        };
        g.phi = mu.expect2(f);
        g.e_f_dev = mu.expect2([&](double x, double y) { return f(x, y) * (x + y - 2 * r); });
        g.e_f_dev2 = mu.expect2([&](double x, double y) { return f(x, y) * (x + y - 2 * r) * (x + y - 2 * r); });
    }
    const double s2 = g.sigma2;
    g.d_phi = g.e_f_dev / s2;
    g.dd_phi = (g.e_f_dev2 / s2 - ell * g.phi - g.m3 / (s2 * s2) * g.e_f_dev) / s2;
    return g;
}

SecondOrderForms second_order_forms(const GrandCanonicalExpansion& g, int ell, int N) {
    SecondOrderForms s;
    const double n = double(N), s2 = g.sigma2;
    s.cumulant_form = (1 + ell / (2 * n)) * g.phi + g.m3 / (2 * n * s2 * s2) * g.e_f_dev - g.e_f_dev2 / (2 * n * s2);
    s.derivative_form = g.phi - s2 / (2 * n) * g.dd_phi;
    return s;
}

EquivalenceResidual equivalence_residual(const LocalObservable& F, int ell, int N, const Potential& v, double lambda0,
                                         const CanonicalOptions& opts) {
    check_canonical(ell, N, F.sites);
    EquivalenceResidual r;
    r.expansion = grand_canonical_expansion(F, v, lambda0);
    const auto& g = r.expansion;
    TiltedMeasure mu(v, opts.tilt.value_or(lambda0));
    CanonicalKernel k(F, ell, N, mu, g.rho, default_spacing(ell, opts), opts.half_width_sigmas);
    const long long i0 = k.index_of(g.rho);
    r.psi = k.psi(i0);
    r.pointwise = r.psi - g.phi + g.sigma2 / (2.0 * N) * g.dd_phi;

    // law of the block mean: N p^{*N}(N r) on r = origin + i h / N
    const GridDensity pN = convolution_power(k.p, N);
    const double h = k.p.spacing;
    const double half = opts.l2_half_width * std::sqrt(g.sigma2 / N);
    const long long span = std::llround(half * N / h);
    const long long stride = std::max<long long>(1, span / std::max(1, (opts.l2_points - 1) / 2));
    double acc = 0, wsum = 0;
    for (long long i = i0 - (span / stride) * stride; i <= i0 + span; i += stride) {
        if (i < 0 || i >= static_cast<long long>(pN.size())) continue;
        const double w = pN.values[std::size_t(i)];
        if (w <= 0) continue;
        const double rr = k.p.origin + double(i) * h / N;
        const double d = rr - g.rho;
        const double res = k.psi(i) - g.phi - g.d_phi * d - 0.5 * g.dd_phi * (d * d - g.sigma2 / N);
        const double tw = (i == i0 - (span / stride) * stride || i + stride > i0 + span) ? 0.5 * w : w;
        acc += tw * res * res;
        wsum += tw;
    }
    r.l2 = acc / wsum;
    return r;
}

CanonicalSampler::CanonicalSampler(Potential v, CanonicalSpec spec, double lambda_ref, SeedStream rng,
                                   const SamplerOptions& opts)
    : v_(std::move(v)), spec_(spec), lambda_(lambda_ref), rng_(rng), width_(opts.initial_width) {
    if (spec.ell < 1) throw UsageError("canonical sampler: ell must be >= 1");
    ticks_.assign(std::size_t(spec.ell), std::llround(spec.rho / kTick));
    if (spec.ell == 1) return;
    double acc_total = 0;
    for (int b = 0; b < opts.warmup_batches; ++b) {
        int acc = 0;
        for (int i = 0; i < opts.batch_size; ++i) acc += propose();
        const double rate = double(acc) / opts.batch_size;
        acc_total += rate;
        if (rate < opts.target_low)
            width_ *= 0.7;
        else if (rate > opts.target_high)
            width_ *= 1.4;
    }
    warmup_acceptance_ = acc_total / std::max(1, opts.warmup_batches);
    proposals_ = accepted_ = 0;
}

bool CanonicalSampler::propose() {
    const int ell = spec_.ell;
    if (ell < 2) return false;
    const auto i = std::size_t(rng_.next_u64() % std::uint64_t(ell));
    auto j = std::size_t(rng_.next_u64() % std::uint64_t(ell - 1));
    if (j >= i) ++j;
    const std::int64_t d = std::llround((2 * rng_.uniform() - 1) * width_ / kTick);
    const double ui = double(ticks_[i]) * kTick, uj = double(ticks_[j]) * kTick;
    const double ni = double(ticks_[i] + d) * kTick, nj = double(ticks_[j] - d) * kTick;
    const double log_ratio = log_p(ni) + log_p(nj) - log_p(ui) - log_p(uj);
    ++proposals_;
    if (log_ratio >= 0 || rng_.uniform() < std::exp(log_ratio)) {
        ticks_[i] += d;
        ticks_[j] -= d;
        ++accepted_;
        return true;
    }
    return false;
}

void CanonicalSampler::sweep() {
    for (int k = 0; k < spec_.ell; ++k) propose();
}

std::vector<double> CanonicalSampler::draw(int sweeps) {
    for (int s = 0; s < sweeps; ++s) sweep();
    return state();
}

std::vector<double> CanonicalSampler::state() const {
    std::vector<double> u(ticks_.size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = double(ticks_[i]) * kTick;
    return u;
}

std::int64_t CanonicalSampler::tick_sum() const {
    std::int64_t s = 0;
    for (auto t : ticks_) s += t;
    return s;
}

double CanonicalSampler::acceptance_rate() const {
    return proposals_ ? double(accepted_) / double(proposals_) : 0.0;
}

std::vector<double> canonical_sampler(const Potential& v, const CanonicalSpec& spec, double lambda_ref, int sweeps,
                                      SeedStream rng) {
    CanonicalSampler s(v, spec, lambda_ref, rng);
    return s.draw(sweeps);
}

PoincareReport poincare_ratio(const LocalObservable& F, const CanonicalSpec& spec, const Potential& v,
                              const PoincareBudget& budget, SeedStream rng) {
    if (F.sites != spec.ell) throw UsageError("poincare ratio: observable support differs from ell");
    CanonicalSampler s(v, spec, budget.lambda_ref, rng);
    s.draw(budget.burn_in_sweeps);
    const int ell = spec.ell;
    const auto nd = static_cast<std::size_t>(budget.draws);
    std::vector<double> fv(nd), dv(nd), g(static_cast<std::size_t>(ell));
    for (int k = 0; k < budget.draws; ++k) {
        const auto u = s.draw(budget.sweeps_between);
        fv[std::size_t(k)] = F(u);
        F.grad(u, g);
        double d = 0;
        for (int i = 0; i + 1 < ell; ++i) d += 0.5 * (g[i] - g[i + 1]) * (g[i] - g[i + 1]);
        dv[std::size_t(k)] = d;
    }
    PoincareReport r;
    r.acceptance = s.acceptance_rate();
    double mf = 0;
    for (double x : fv) mf += x;
    mf /= double(fv.size());
    // batch means for standard errors of both averages
    const int nb = std::max(2, budget.batches);
    const std::size_t bs = fv.size() / std::size_t(nb);
    std::vector<double> bv(static_cast<std::size_t>(nb)), bd(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) {
        double sv = 0, sd = 0;
        for (std::size_t k = std::size_t(b) * bs; k < std::size_t(b + 1) * bs; ++k) {
            sv += (fv[k] - mf) * (fv[k] - mf);
            sd += dv[k];
        }
        bv[std::size_t(b)] = sv / double(bs);
        bd[std::size_t(b)] = sd / double(bs);
    }
    const auto ev = mean_estimate(bv), ed = mean_estimate(bd);
    r.variance = ev.value * double(nb * bs) / double(nb * bs - 1);
    r.variance_se = ev.se;
    r.dirichlet = ed.value;
    r.dirichlet_se = ed.se;
    if (r.variance == 0.0) {
        r.ratio = 0.0;
    } else if (r.dirichlet == 0.0) {
        r.infinite = true;
        r.ratio = INFINITY;
    } else {
        r.ratio = r.variance / r.dirichlet;
        r.ratio_se = r.ratio * std::hypot(r.variance_se / r.variance, r.dirichlet_se / r.dirichlet);
    }
    r.constant = r.ratio / double(ell * ell);
    return r;
}

}  // namespace kpzlab
