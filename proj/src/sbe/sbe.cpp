#include "kpzlab/sbe/sbe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/core/fft.hpp"
#include "kpzlab/core/parallel.hpp"

namespace kpzlab {

using cplx = std::complex<double>;

double SbeParams::q(std::size_t k) const { return 2.0 * std::numbers::pi * double(k) / L; }

void validate(const SbeParams& p) {
    if (!(p.nu > 0)) throw UsageError("sbe: nu must be positive");
    if (!(p.L > 0)) throw UsageError("sbe: L must be positive");
    if (p.K < 1) throw UsageError("sbe: K must be at least 1");
    if (!(p.dt > 0)) throw UsageError("sbe: dt must be positive");
    if (!std::isfinite(p.b)) throw UsageError("sbe: b must be finite");
    if (!(p.delta >= p.L / (2.0 * double(p.K)) * (1 - 1e-12)))
        throw UsageError("sbe: delta below the grid resolution L/(2K)");
}

SbeParams sbe_params(const BurgersCoefficients& bc, double L, std::size_t K, double delta, double dt) {
    SbeParams p;
    p.nu = bc.nu;
    p.b = bc.b;
    p.L = L;
    p.K = K;
    p.delta = delta;
    p.dt = dt;
    validate(p);
    return p;
}

SpectralState sample_white_initial(const SbeParams& p, SeedStream& rng) {
    validate(p);
    SpectralState s;
    s.modes.assign(p.K + 1, cplx(0, 0));
    const double var = p.sigma2() / p.L;
    const double sd = std::sqrt(0.5 * var);
    for (std::size_t k = 1; k <= p.K; ++k) {
        const double re = rng.normal(), im = rng.normal();
        s.modes[k] = cplx(sd * re, sd * im);
    }
    if (p.sample_mean_mode) s.modes[0] = std::sqrt(var) * rng.normal();
    return s;
}

namespace {
std::size_t grid_for(std::size_t K) { return good_fft_size(3 * K + 1); }
}  // namespace

double stability_dt(const SbeParams& p) {
    if (p.b == 0.0) return std::numeric_limits<double>::infinity();
    const double dx = p.L / double(grid_for(p.K));
    const double umax = 6.0 * std::sqrt(p.sigma2() / p.delta);
    return dx / (2.0 * std::abs(p.b) * umax);
}

cplx mollifier_symbol(double q, double delta) {
    const double z = q * delta;
    if (std::abs(z) < 1e-6) return cplx(1.0 - z * z / 6.0, z / 2.0 - z * z * z / 24.0);
    return (std::exp(cplx(0, z)) - 1.0) / cplx(0, z);
}

struct SbeSolver::Impl {
    explicit Impl(std::size_t M) : fft(M), grid(M), spec(M / 2 + 1) {}
    RealFft fft;
    std::vector<double> grid;
    std::vector<cplx> spec;
    std::vector<cplx> mol, decay, phi1, nl;
    std::vector<double> noise_sd, xi;
};

SbeSolver::SbeSolver(const SbeParams& p) : p_(p), M_(grid_for(p.K)) {
    validate(p);
    if (p.b != 0.0 && !(p.dt < stability_dt(p))) throw UsageError("sbe: dt above the stability threshold");
    impl_ = std::make_unique<Impl>(M_);
    auto& I = *impl_;
    I.mol.resize(p.K + 1);
    I.decay.resize(p.K + 1);
    I.phi1.resize(p.K + 1);
    I.noise_sd.resize(p.K + 1);
    I.nl.resize(p.K + 1);
    I.xi.resize(2 * p.K);
    for (std::size_t k = 0; k <= p.K; ++k) {
        const double q = p.q(k);
        I.mol[k] = mollifier_symbol(q, p.delta);
        if (k == 0) {
            I.decay[k] = 1.0;
            I.phi1[k] = p.dt;
            I.noise_sd[k] = 0.0;
            continue;
        }
        const double a = p.nu * q * q;
        I.decay[k] = std::exp(-a * p.dt);
        I.phi1[k] = -std::expm1(-a * p.dt) / a;
        // exact OU transition variance of the mode, split over real and imaginary parts
        I.noise_sd[k] = std::sqrt(-std::expm1(-2.0 * a * p.dt) / (2.0 * p.nu * p.L) * 0.5);
    }
}

SbeSolver::~SbeSolver() = default;

void SbeSolver::nonlinear_term(const SpectralState& s, std::span<cplx> out) {
    auto& I = *impl_;
    const std::size_t K = p_.K;
    if (s.modes.size() != K + 1 || out.size() < K + 1) throw UsageError("sbe: mode count mismatch");
    if (p_.b == 0.0) {
        std::fill(out.begin(), out.begin() + std::ptrdiff_t(K + 1), cplx(0, 0));
        return;
    }
    std::fill(I.spec.begin(), I.spec.end(), cplx(0, 0));
    for (std::size_t k = 0; k <= K; ++k) I.spec[k] = s.modes[k] * I.mol[k];
    I.fft.inverse(I.spec, I.grid);
    for (double& v : I.grid) v *= v;
    I.fft.forward(I.grid, I.spec);
    const double inv = 1.0 / double(M_);
    out[0] = 0.0;
    for (std::size_t k = 1; k <= K; ++k) out[k] = -p_.b * cplx(0, p_.q(k)) * I.spec[k] * inv;
}

void SbeSolver::step(SpectralState& s, SeedStream* rng) {
    auto& I = *impl_;
    const std::size_t K = p_.K;
    nonlinear_term(s, I.nl);
    if (rng) rng->fill_normal(I.xi);
    for (std::size_t k = 1; k <= K; ++k) {
        cplx v = I.decay[k] * s.modes[k] + I.phi1[k] * I.nl[k];
        // noise enters as i q (.) so the phase is i times a complex Gaussian
        if (rng) v += cplx(0, 1) * cplx(I.noise_sd[k] * I.xi[2 * (k - 1)], I.noise_sd[k] * I.xi[2 * (k - 1) + 1]);
        if (!(std::abs(v) < 1e150)) throw BlowUpError("sbe: mode " + std::to_string(k) + " blew up", s.steps + 1);
        s.modes[k] = v;
    }
    ++s.steps;
    s.time = double(s.steps) * p_.dt;
}

std::vector<double> SbeSolver::real_field(const SpectralState& s, std::size_t M) const {
    if (M == 0) M = M_;
    if (M < 2 * p_.K + 1) throw UsageError("sbe: grid too coarse for the kept modes");
    RealFft f(M);
    std::vector<cplx> spec(M / 2 + 1, cplx(0, 0));
    for (std::size_t k = 0; k <= p_.K; ++k) spec[k] = s.modes[k];
    std::vector<double> out(M);
    f.inverse(spec, out);
    return out;
}

void sbe_step(SbeSolver& solver, SpectralState& s, SeedStream* rng) { solver.step(s, rng); }

std::vector<cplx> pairing_weights(const SbeParams& p, const TestFunction& eta) {
    std::vector<cplx> w(p.K + 1);
    for (std::size_t k = 0; k <= p.K; ++k) w[k] = eta.fourier(-p.q(k));
    return w;
}

double pair(const SpectralState& s, std::span<const cplx> weights) {
    if (weights.size() != s.modes.size()) throw UsageError("sbe: pairing weights do not match the mode count");
    double acc = (s.modes[0] * weights[0]).real();
    for (std::size_t k = 1; k < s.modes.size(); ++k) acc += 2.0 * (s.modes[k] * weights[k]).real();
    return acc;
}

double l2_distance(const SpectralState& a, const SpectralState& b, double L) {
    const std::size_t n = std::max(a.modes.size(), b.modes.size());
    double s = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const cplx x = k < a.modes.size() ? a.modes[k] : cplx(0, 0);
        const cplx y = k < b.modes.size() ? b.modes[k] : cplx(0, 0);
        s += (k == 0 ? 1.0 : 2.0) * std::norm(x - y);
    }
    return std::sqrt(L * s);
}

SpectrumReport stationary_spectrum_check(const SpectrumConfig& cfg) {
    const auto& p = cfg.params;
    validate(p);
    if (cfg.replicas < 2 || cfg.samples < 1 || cfg.sample_every < 1 || cfg.burn_in < 0)
        throw UsageError("spectrum check: need >= 2 replicas and positive sample counts");
    const std::size_t R = std::size_t(cfg.replicas);
    std::vector<std::vector<double>> per(p.K + 1, std::vector<double>(R));
    parallel_for(R, [&](std::size_t r) {
        SeedStream init(cfg.seed, r, StreamTag::sbe_init), noise(cfg.seed, r, StreamTag::sbe_noise);
        SbeSolver solver(p);
        auto s = sample_white_initial(p, init);
        for (int i = 0; i < cfg.burn_in; ++i) solver.step(s, &noise);
        std::vector<double> acc(p.K + 1, 0.0);
        for (int j = 0; j < cfg.samples; ++j) {
            for (int i = 0; i < cfg.sample_every; ++i) solver.step(s, &noise);
            for (std::size_t k = 1; k <= p.K; ++k) acc[k] += std::norm(s.modes[k]);
        }
        for (std::size_t k = 1; k <= p.K; ++k) per[k][r] = acc[k] / cfg.samples;
    });
    SpectrumReport rep;
    rep.exact_case = p.b == 0.0;
    const double target = p.sigma2() / p.L;
    for (std::size_t k = 1; k <= p.K; ++k) {
        ModeEnergy m;
        m.k = k;
        m.energy = mean_estimate(per[k]);
        m.target = target;
        m.z = m.energy.se > 0 ? (m.energy.value - target) / m.energy.se : 0.0;
        rep.max_abs_z = std::max(rep.max_abs_z, std::abs(m.z));
        rep.max_relative_deviation = std::max(rep.max_relative_deviation, std::abs(m.energy.value / target - 1));
        rep.modes.push_back(m);
    }
    rep.pass = rep.exact_case && rep.max_abs_z <= 3.0;
    return rep;
}

std::vector<CorrelationCell> sbe_two_point(const SbeCorrelationConfig& cfg) {
    const auto& p = cfg.params;
    validate(p);
    const std::size_t nb = cfg.bases.size(), no = cfg.offsets.size();
    if (nb == 0 || no == 0 || cfg.offsets[0] != 0.0) throw UsageError("sbe_two_point: need bases and offsets starting at 0");
    if (cfg.records < 1 || cfg.record_every < 1 || cfg.replicas < 2) throw UsageError("sbe_two_point: bad sampling counts");
    for (int lag : cfg.lag_records)
        if (lag < 0 || lag > cfg.records) throw UsageError("sbe_two_point: lag out of range");
    std::vector<std::vector<cplx>> weights;
    for (const auto& e : cfg.bases)
        for (double x : cfg.offsets) {
            const auto shifted = e.family() == TestFamily::gaussian_bump
                                     ? TestFunction::gaussian(e.center() + x, e.width())
                                     : TestFunction::hermite(e.center() + x, e.width(), e.order());
            weights.push_back(pairing_weights(p, shifted));
        }
    const std::size_t R = std::size_t(cfg.replicas), nl = cfg.lag_records.size();
    std::vector<std::vector<double>> per(nl * no, std::vector<double>(R));
    parallel_for(R, [&](std::size_t r) {
        SeedStream init(cfg.seed, r, StreamTag::sbe_init), noise(cfg.seed, r, StreamTag::sbe_noise);
        SbeSolver solver(p);
        auto s = sample_white_initial(p, init);
        for (int i = 0; i < cfg.burn_in; ++i) solver.step(s, &noise);
        std::vector<std::vector<double>> series(weights.size());
        auto record = [&] {
            for (std::size_t w = 0; w < weights.size(); ++w) series[w].push_back(pair(s, weights[w]));
        };
        record();
        for (int j = 0; j < cfg.records; ++j) {
            for (int i = 0; i < cfg.record_every; ++i) solver.step(s, &noise);
            record();
        }
        for (std::size_t l = 0; l < nl; ++l) {
            const int lag = cfg.lag_records[l];
            for (std::size_t o = 0; o < no; ++o) {
                double acc = 0;
                long long cnt = 0;
                for (std::size_t b = 0; b < nb; ++b)
                    for (int k = 0; k + lag <= cfg.records; ++k) {
                        acc += series[b * no + o][std::size_t(k + lag)] * series[b * no][std::size_t(k)];
                        ++cnt;
                    }
                per[l * no + o][r] = acc / double(cnt);
            }
        }
    });
    std::vector<CorrelationCell> out;
    for (std::size_t l = 0; l < nl; ++l)
        for (std::size_t o = 0; o < no; ++o) {
            CorrelationCell c;
            c.x = cfg.offsets[o];
            c.t = double(cfg.lag_records[l]) * cfg.record_every * p.dt;
            c.value = mean_estimate(per[l * no + o]);
            out.push_back(c);
        }
    return out;
}

double ou_two_point(const SbeParams& p, const TestFunction& eta, double x, double t) {
    const double c = p.sigma2() / p.L;
    double s = p.sample_mean_mode ? c * std::norm(eta.fourier(0.0)) : 0.0;
    for (std::size_t k = 1; k <= p.K; ++k) {
        const double q = p.q(k);
        s += 2.0 * c * std::exp(-p.nu * q * q * t) * std::norm(eta.fourier(q)) * std::cos(q * x);
    }
    return s;
}

CorrelationComparison compare_correlations(std::span<const CorrelationCell> a, std::span<const CorrelationCell> b) {
    if (a.size() != b.size() || a.empty()) throw UsageError("compare_correlations: tables must match and be non-empty");
    CorrelationComparison c;
    c.cells = a.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i].x - b[i].x) > 1e-12 || std::abs(a[i].t - b[i].t) > 1e-9 * std::max(1.0, a[i].t))
            throw UsageError("compare_correlations: lag grids differ");
        const bool ok = std::abs(a[i].value.value - b[i].value.value) <= 1.96 * (a[i].value.se + b[i].value.se);
        c.overlap.push_back(ok);
        c.overlapping += ok;
    }
    c.fraction = double(c.overlapping) / double(c.cells);
    c.pass = c.fraction >= 0.8;
    return c;
}

}  // namespace kpzlab
