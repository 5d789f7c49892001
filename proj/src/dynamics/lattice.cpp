#include <algorithm>
#include <cmath>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/dynamics/dynamics.hpp"
#include "kpzlab/harness/summary.hpp"

namespace kpzlab {

double apply_discrete_op(DiscreteOp op, std::span<const double> f, std::size_t i) {
    const std::size_t n = f.size();
    const double fp = f[(i + 1) % n], fm = f[(i + n - 1) % n], f0 = f[i];
    switch (op) {
        case DiscreteOp::laplacian: return fp + fm - 2 * f0;
        case DiscreteOp::grad1: return fp - f0;
        case DiscreteOp::grad2: return 0.5 * (fp - fm);
    }
    return 0.0;
}

double apply_discrete_op(DiscreteOp op, const std::function<double(long long)>& f, long long i) {
    switch (op) {
        case DiscreteOp::laplacian: return f(i + 1) + f(i - 1) - 2 * f(i);
        case DiscreteOp::grad1: return f(i + 1) - f(i);
        case DiscreteOp::grad2: return 0.5 * (f(i + 1) - f(i - 1));
    }
    return 0.0;
}

double apply_scaled_op(DiscreteOp op, const std::function<double(double)>& f, double x, double n) {
    const double h = 1.0 / n;
    switch (op) {
        case DiscreteOp::laplacian: return n * n * (f(x + h) + f(x - h) - 2 * f(x));
        case DiscreteOp::grad1: return n * (f(x + h) - f(x));
        case DiscreteOp::grad2: return 0.5 * n * (f(x + h) - f(x - h));
    }
    return 0.0;
}

void drift(const LatticeState& s, std::span<double> out) {
    const std::size_t n = s.size();
    thread_local std::vector<double> f;
    f.resize(n);
    s.potential.first_batch(s.u, f);
    const double a = s.alpha;
    for (std::size_t i = 0; i < n; ++i) {
        const double fp = f[i + 1 == n ? 0 : i + 1], fm = f[i == 0 ? n - 1 : i - 1];
        out[i] = 0.5 * (fp + fm - 2 * f[i]) + a * 0.5 * (fp - fm);
    }
}

std::vector<double> drift(const LatticeState& s) {
    std::vector<double> out(s.size());
    drift(s, out);
    return out;
}

void em_step_with_force(LatticeState& s, double dt, std::span<const double> xi, std::span<const double> f) {
    if (!(dt > 0)) throw UsageError("em_step: dt must be positive");
    const std::size_t n = s.size();
    if (n < 3) throw UsageError("em_step: need at least 3 sites");
    const double hd = 0.5 * dt, ad = 0.5 * s.alpha * dt;
    const double sq = std::sqrt(dt);
    double* u = s.u.data();
    const double* fx = f.data();
    const double* x = xi.data();
    auto update = [&](std::size_t i, std::size_t ip, std::size_t im) {
        const double fp = fx[ip], fm = fx[im];
        u[i] += hd * (fp + fm - 2 * fx[i]) + ad * (fp - fm) + sq * (x[ip] - x[i]);
    };
    update(0, 1, n - 1);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double fp = fx[i + 1], fm = fx[i - 1];
        u[i] += hd * (fp + fm - 2 * fx[i]) + ad * (fp - fm) + sq * (x[i + 1] - x[i]);
    }
    update(n - 1, 0, n - 2);
    ++s.steps;
    s.time += dt;
    if (!std::all_of(s.u.begin(), s.u.end(), [](double v) { return std::isfinite(v); }))
        throw BlowUpError("em_step: non-finite lattice value", s.steps);
}

void em_step_with_noise(LatticeState& s, double dt, std::span<const double> xi, const StepOptions& opts) {
    thread_local std::vector<double> f, zero;
    f.resize(s.size());
    if (opts.with_drift)
        s.potential.first_batch(s.u, f);
    else
        std::fill(f.begin(), f.end(), 0.0);
    if (opts.with_noise) return em_step_with_force(s, dt, xi, f);
    zero.assign(s.size(), 0.0);
    em_step_with_force(s, dt, zero, f);
}

void em_step(LatticeState& s, double dt, SeedStream& rng, std::span<double> noise_out, const StepOptions& opts) {
    thread_local std::vector<double> xi;
    xi.resize(s.size());
    if (opts.with_noise) rng.fill_normal(xi);
    else std::fill(xi.begin(), xi.end(), 0.0);
    em_step_with_noise(s, dt, xi, opts);
    if (!noise_out.empty()) std::copy(xi.begin(), xi.end(), noise_out.begin());
}

StationarySampler::StationarySampler(const TiltedMeasure& mu, std::size_t cells) : mean_(mu.mean()) {
    const double sd = std::sqrt(mu.sigma2());
    const double lo = mu.mean() - 12 * sd, hi = mu.mean() + 12 * sd;
    const double h = (hi - lo) / double(cells);
    std::vector<double> x(cells + 1), p(cells + 1), F(cells + 1, 0.0);
    for (std::size_t i = 0; i <= cells; ++i) {
        x[i] = lo + double(i) * h;
        p[i] = mu.density(x[i]);
    }
    // Simpson on each cell using the midpoint
    for (std::size_t i = 0; i < cells; ++i) {
        const double pm = mu.density(x[i] + 0.5 * h);
        F[i + 1] = F[i] + h / 6 * (p[i] + 4 * pm + p[i + 1]);
    }
    const double tot = F.back();
    for (double& v : F) v /= tot;
    std::vector<double> fx, xx;
    for (std::size_t i = 0; i <= cells; ++i)
        if (fx.empty() || F[i] > fx.back()) {
            fx.push_back(F[i]);
            xx.push_back(x[i]);
        }
    x_ = xx;
    F_ = fx;
    inverse_ = Pchip(fx, xx);
}

double StationarySampler::cdf(double t) const {
    if (t <= x_.front()) return 0.0;
    if (t >= x_.back()) return 1.0;
    const auto k = std::size_t(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin()) - 1;
    const double w = (t - x_[k]) / (x_[k + 1] - x_[k]);
    return F_[k] + w * (F_[k + 1] - F_[k]);
}

LatticeState sample_stationary(std::size_t n_sites, const StationarySampler& sampler, const Potential& v,
                               double lambda, SeedStream& rng) {
    LatticeState s;
    s.potential = v;
    s.lambda0 = lambda;
    s.u.resize(n_sites);
    for (double& x : s.u) x = sampler(rng);
    return s;
}

LatticeState sample_stationary(std::size_t n_sites, const Potential& v, double lambda, SeedStream& rng) {
    TiltedMeasure mu(v, lambda);
    StationarySampler sampler(mu);
    return sample_stationary(n_sites, sampler, v, lambda, rng);
}

double sum_compensated(std::span<const double> u) { return compensated_sum(u); }

double weighted_norm(std::span<const double> u, double r, std::size_t center) {
    CompensatedSum s;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double j = std::abs(double(i) - double(center));
        const double w = j == 0 ? 1.0 : std::pow(j, -r);
        s.add(u[i] * u[i] * w);
    }
    return std::sqrt(s.value());
}

std::size_t lattice_size(double n, double support_width, double sigma2, double T_macro) {
    const double raw = (n * support_width + std::pow(n, 1.5) / sigma2 * T_macro) * 1.2;
    std::size_t m = 8;
    while (double(m) < std::ceil(raw)) m *= 2;
    return m;
}

}  // namespace kpzlab
