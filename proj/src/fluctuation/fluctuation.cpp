#include "kpzlab/fluctuation/fluctuation.hpp"

#include <algorithm>
#include <cmath>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/core/parallel.hpp"

namespace kpzlab {

namespace {

inline double atom(long long j, double n, double c_n, double t) { return double(j) / n + c_n * t; }

inline std::size_t site(long long j, std::size_t N) {
    const long long m = j % (long long)N;
    return std::size_t(m < 0 ? m + (long long)N : m);
}

// sites whose atoms can see eta at time t: [lo, hi]
void atom_range(const TestFunction& eta, double H, const FrameGeometry& g, double t, long long& lo, long long& hi) {
    lo = (long long)std::floor(g.n * (eta.center() - H - g.c_n * t)) - 1;
    hi = (long long)std::ceil(g.n * (eta.center() + H - g.c_n * t)) + 1;
}

double wrapped_position(std::size_t i, const FrameGeometry& g, double t, double center) {
    const double L = g.length();
    double x = double(i) / g.n + g.c_n * t;
    x += L * std::round((center - x) / L);
    return x;
}

}  // namespace

FrameGeometry frame_geometry(double n, const BurgersCoefficients& bc, std::size_t n_sites) {
    if (!(n > 0)) throw UsageError("frame_geometry: n must be positive");
    FrameGeometry g;
    g.n = n;
    g.c_n = bc.c_n(n);
    g.rho_prime = bc.rho_prime;
    g.n_sites = n_sites;
    return g;
}

double field_eval(std::span<const double> u, const TestFunction& eta, const FrameGeometry& g, double t) {
    return field_eval(u, [&](double x) { return eta.value(x); }, g, t, eta.center());
}

double field_eval(std::span<const double> u, const std::function<double(double)>& eta, const FrameGeometry& g,
                  double t, double center) {
    if (u.size() != g.n_sites) throw UsageError("field_eval: lattice size does not match the geometry");
    CompensatedSum s;
    for (std::size_t i = 0; i < u.size(); ++i) s.add((u[i] - g.rho_prime) * eta(wrapped_position(i, g, t, center)));
    return s.value() / std::sqrt(g.n);
}

double field_variance_exact(const TestFunction& eta, const FrameGeometry& g, double t, double sigma2) {
    long long lo, hi;
    atom_range(eta, eta.support_half_width(), g, t, lo, hi);
    CompensatedSum s;
    for (long long j = lo; j <= hi; ++j) {
        const double e = eta.value(atom(j, g.n, g.c_n, t));
        s.add(e * e);
    }
    return sigma2 * s.value() / g.n;
}

double martingale_qv_rate(const TestFunction& eta, const FrameGeometry& g, double t) {
    long long lo, hi;
    atom_range(eta, eta.support_half_width(), g, t, lo, hi);
    CompensatedSum s;
    for (long long j = lo - 1; j <= hi; ++j) {
        const double d = g.n * (eta.value(atom(j + 1, g.n, g.c_n, t)) - eta.value(atom(j, g.n, g.c_n, t)));
        s.add(d * d);
    }
    return s.value() / g.n;
}

double quadratic_field(std::span<const double> u, std::size_t k, std::size_t ell, double rho_prime, double sigma2) {
    if (ell == 0 || u.empty()) throw UsageError("quadratic_field: empty block");
    double s = 0.0;
    for (std::size_t m = 0; m < ell; ++m) s += u[(k + m) % u.size()] - rho_prime;
    const double mean = s / double(ell);
    return mean * mean - sigma2 / double(ell);
}

std::size_t scaling_lattice_size(const ScalingConfig& cfg, const BurgersCoefficients& bc) {
    double lo = 1e300, hi = -1e300;
    auto cover = [&](const TestFunction& e) {
        const double H = e.support_half_width();
        lo = std::min(lo, e.center() - H);
        hi = std::max(hi, e.center() + H);
    };
    for (const auto& e : cfg.etas) cover(e);
    for (const auto& e : cfg.probes) cover(e);
    if (lo > hi) throw UsageError("scaling: no test functions");
    double dmax = 0.0;
    for (double d : cfg.deltas) dmax = std::max(dmax, d);
    return lattice_size(cfg.n, hi - lo + dmax + 2.0 / cfg.n, bc.sigma2, cfg.T);
}

ScalingRun prepare_scaling(const ScalingConfig& cfg) {
    if (!(cfg.n >= 2)) throw UsageError("scaling: n must be at least 2");
    if (!(cfg.T > 0) || !(cfg.dt > 0)) throw UsageError("scaling: T and dt must be positive");
    if (cfg.replicas < 1 || cfg.records < 1) throw UsageError("scaling: replicas and records must be positive");
    if (cfg.etas.empty()) throw UsageError("scaling: at least one test function is needed");
    ScalingRun run;
    run.config = cfg;
    run.coeffs = burgers_coefficients(cfg.potential, cfg.lambda0);
    for (double d : cfg.deltas) {
        const double l = d * cfg.n;
        if (!(d > 0) || std::abs(l - std::round(l)) > 1e-9) throw UsageError("scaling: delta * n must be a positive integer");
        run.block_lengths.push_back(std::size_t(std::llround(l)));
    }
    const std::size_t N = cfg.n_sites ? cfg.n_sites : scaling_lattice_size(cfg, run.coeffs);
    run.geometry = frame_geometry(cfg.n, run.coeffs, N);
    run.alpha = 1.0 / std::sqrt(cfg.n);
    run.dt_macro = cfg.dt / (cfg.n * cfg.n);
    const long long raw = std::max<long long>(1, std::llround(cfg.T / run.dt_macro));
    run.record_every = int(std::max<long long>(1, std::llround(double(raw) / cfg.records)));
    run.steps = (long long)run.record_every * cfg.records;
    for (int r = 0; r <= cfg.records; ++r) run.times.push_back(double((long long)r * run.record_every) * run.dt_macro);

    long long span = 0;
    for (const auto& e : cfg.etas) {
        long long lo, hi;
        atom_range(e, e.support_half_width(), run.geometry, 0.0, lo, hi);
        span = std::max(span, hi - lo + 4 + (long long)(run.block_lengths.empty() ? 0 : *std::max_element(run.block_lengths.begin(), run.block_lengths.end())));
    }
    if (span >= (long long)N) throw UsageError("scaling: lattice too small for the test-function window");
    run.sampler = std::make_shared<StationarySampler>(TiltedMeasure(cfg.potential, cfg.lambda0));
    return run;
}

namespace {

struct EtaWork {
    const TestFunction* eta = nullptr;
    double H = 0.0;
    long long lo_prev = 0, hi_prev = -1;
    std::vector<double> e1_prev;  // eta at the end of the previous step on [lo_prev, hi_prev]
    std::vector<double> e0, e1, cum;
    double S = 0, A = 0, M = 0, qv = 0, qv_path = 0, bg1 = 0, v0 = 0;
    std::vector<double> bg2, nl;
};

void push_record(EtaSeries& es, const EtaWork& w, double v) {
    es.v.push_back(v);
    es.S.push_back(w.S);
    es.A.push_back(w.A);
    es.M.push_back(w.M);
    es.qv.push_back(w.qv);
    es.qv_path.push_back(w.qv_path);
    es.bg1.push_back(w.bg1);
    for (std::size_t d = 0; d < w.bg2.size(); ++d) {
        es.bg2[d].push_back(w.bg2[d]);
        es.nl[d].push_back(w.nl[d]);
    }
}

// block route vs indicator route for the NL integrand at time t
double nl_identity_error(const LatticeState& s, const EtaWork& w, const FrameGeometry& g, double t, std::size_t ell,
                         double delta, double sigma2) {
    long long lo, hi;
    atom_range(*w.eta, w.H, g, t, lo, hi);
    const std::size_t N = s.size();
    const double n = g.n, rn = 1.0 / std::sqrt(n), eps = 1e-6 / n;
    double block = 0, moll = 0, scale = 0;
    for (long long j = lo; j <= hi; ++j) {
        const double gj = 0.5 * n * (w.eta->value(atom(j + 1, n, g.c_n, t)) - w.eta->value(atom(j - 1, n, g.c_n, t)));
        if (gj == 0.0) continue;
        const double xj = atom(j, n, g.c_n, t);
        double vm = 0.0;
        for (long long m = j - 1; m <= j + (long long)ell + 1; ++m) {
            const double d = atom(m, n, g.c_n, t) - xj;
            if (d >= -eps && d < delta - eps) vm += rn * (s.u[site(m, N)] - g.rho_prime) / delta;
        }
        const double q = quadratic_field(s.u, site(j, N), ell, g.rho_prime, sigma2);
        block += gj * q;
        moll += gj * (vm * vm - sigma2 / delta) / n;
        scale += std::abs(gj) * (std::abs(q) + sigma2 / double(ell));
    }
    return scale > 0 ? std::abs(block - moll) / scale : 0.0;
}

}  // namespace

ReplicaTrace run_scaling_replica(const ScalingRun& setup, std::size_t replica) {
    const auto& cfg = setup.config;
    const auto& g = setup.geometry;
    const auto& bc = setup.coeffs;
    const std::size_t N = g.n_sites;
    const double n = g.n, rho = g.rho_prime, phi = bc.lambda0, s2 = bc.sigma2;
    const double dtm = setup.dt_macro, rn = 1.0 / std::sqrt(n), sqdt = std::sqrt(cfg.dt);
    const double cS = dtm * 0.5 * rn, cA = setup.alpha * cfg.dt * rn / n, cM = rn * sqdt;
    const std::size_t nd = setup.block_lengths.size();

    SeedStream init(cfg.seed, replica, StreamTag::stationary_init);
    SeedStream noise(cfg.seed, replica, StreamTag::dynamics_noise);
    LatticeState s = sample_stationary(N, *setup.sampler, cfg.potential, cfg.lambda0, init);
    s.alpha = setup.alpha;

    ReplicaTrace tr;
    tr.etas.resize(cfg.etas.size());
    tr.probes.assign(cfg.probes.size(), {});
    std::vector<EtaWork> work(cfg.etas.size());
    for (std::size_t e = 0; e < work.size(); ++e) {
        work[e].eta = &cfg.etas[e];
        work[e].H = cfg.etas[e].support_half_width();
        work[e].bg2.assign(nd, 0.0);
        work[e].nl.assign(nd, 0.0);
        tr.etas[e].bg2.assign(nd, {});
        tr.etas[e].nl.assign(nd, {});
        work[e].v0 = field_eval(s.u, cfg.etas[e], g, 0.0);
        push_record(tr.etas[e], work[e], work[e].v0);
    }
    for (std::size_t p = 0; p < cfg.probes.size(); ++p) tr.probes[p].push_back(field_eval(s.u, cfg.probes[p], g, 0.0));

    std::size_t ell_max = 0;
    for (auto l : setup.block_lengths) ell_max = std::max(ell_max, l);
    std::vector<double> xi(N), f(N);

    for (long long k = 0; k < setup.steps; ++k) {
        const double t = double(k) * dtm, t1 = double(k + 1) * dtm;
        noise.fill_normal(xi);
        cfg.potential.first_batch(s.u, f);

        for (auto& w : work) {
            long long a, b, a1, b1;
            atom_range(*w.eta, w.H, g, t1, a, b1);
            atom_range(*w.eta, w.H, g, t, a1, b);
            const long long lo = a - 1, hi = b + 1, len = hi - lo + 1;
            w.e0.resize(std::size_t(len));
            w.e1.resize(std::size_t(len));
            for (long long j = lo; j <= hi; ++j) {
                const std::size_t q = std::size_t(j - lo);
                w.e0[q] = (j >= w.lo_prev && j <= w.hi_prev) ? w.e1_prev[std::size_t(j - w.lo_prev)]
                                                              : w.eta->value(atom(j, n, g.c_n, t));
                w.e1[q] = w.eta->value(atom(j, n, g.c_n, t1));
            }
            if (!cfg.accumulate) continue;
            if (nd) {
                // prefix sums of u - rho' on [a, b + ell_max]
                w.cum.assign(std::size_t(b - a + 2 + (long long)ell_max), 0.0);
                for (long long j = a; j <= b + (long long)ell_max; ++j)
                    w.cum[std::size_t(j - a + 1)] = w.cum[std::size_t(j - a)] + (s.u[site(j, N)] - rho);
            }
            double dS = 0, dA = 0, dM = 0, dq = 0, d1 = 0;
            double d2[8] = {0}, dn[8] = {0};
            for (long long j = a; j <= b; ++j) {
                const std::size_t q = std::size_t(j - lo);
                const std::size_t i = site(j, N), ip = (i + 1 == N) ? 0 : i + 1;
                const double em = w.e0[q - 1], e = w.e0[q], ep = w.e0[q + 1];
                const double lap = n * n * (ep + em - 2 * e);
                const double gj = 0.5 * n * (ep - em);
                const double g1 = n * (ep - e);
                const double fi = f[i], du = s.u[i] - rho;
                dS += lap * (fi - phi);
                dA += gj * fi;
                dM += e * (xi[ip] - xi[i]);
                dq += g1 * g1;
                d1 += gj * (fi - phi - du / s2);
                const double F = fi - phi - bc.d_phi * du;
                for (std::size_t d = 0; d < nd && d < 8; ++d) {
                    const std::size_t ell = setup.block_lengths[d];
                    const std::size_t o = std::size_t(j - a);
                    const double mean = (w.cum[o + ell] - w.cum[o]) / double(ell);
                    const double Q = mean * mean - s2 / double(ell);
                    d2[d] += gj * (F - 0.5 * bc.dd_phi * Q);
                    dn[d] += gj * Q;
                }
            }
            const double mInc = cM * dM;
            w.S += cS * dS;
            w.A -= cA * dA;
            w.M += mInc;
            w.qv += dtm * dq / n;
            w.qv_path += mInc * mInc;
            w.bg1 += dtm * d1;
            for (std::size_t d = 0; d < nd && d < 8; ++d) {
                w.bg2[d] += dtm * d2[d];
                w.nl[d] += dtm * dn[d];
            }
        }

        em_step_with_force(s, cfg.dt, xi, f);

        for (auto& w : work) {
            long long a, b1, a1, b;
            atom_range(*w.eta, w.H, g, t1, a, b1);
            atom_range(*w.eta, w.H, g, t, a1, b);
            const long long lo = a - 1, hi = b + 1;
            if (cfg.accumulate) {
                double fr = 0;
                for (long long j = lo; j <= hi; ++j) {
                    const std::size_t q = std::size_t(j - lo);
                    fr += (s.u[site(j, N)] - rho) * (w.e1[q] - w.e0[q]);
                }
                w.A += rn * fr;
            }
            w.lo_prev = lo;
            w.hi_prev = hi;
            std::swap(w.e1_prev, w.e1);
        }

        if ((k + 1) % setup.record_every == 0) {
            for (std::size_t e = 0; e < work.size(); ++e) {
                auto& w = work[e];
                auto& es = tr.etas[e];
                const double v = field_eval(s.u, *w.eta, g, t1);
                push_record(es, w, v);
                if (!cfg.accumulate) continue;
                const double lhs = v - w.v0, rhs = w.S + w.A + w.M;
                const double scale = std::abs(v) + std::abs(w.v0) + std::abs(w.S) + std::abs(w.A) + std::abs(w.M);
                if (scale > 0) es.split_error = std::max(es.split_error, std::abs(lhs - rhs) / scale);
                for (std::size_t d = 0; d < nd; ++d)
                    es.nl_identity_error = std::max(
                        es.nl_identity_error,
                        nl_identity_error(s, w, g, t1, setup.block_lengths[d], cfg.deltas[d], s2));
            }
            for (std::size_t p = 0; p < cfg.probes.size(); ++p)
                tr.probes[p].push_back(field_eval(s.u, cfg.probes[p], g, t1));
        }
    }
    return tr;
}

ScalingRun run_scaling(const ScalingConfig& cfg) {
    if (cfg.deltas.size() > 8) throw UsageError("scaling: at most 8 mollifier widths");
    ScalingRun run = prepare_scaling(cfg);
    run.replicas.resize(std::size_t(cfg.replicas));
    parallel_for(run.replicas.size(), [&](std::size_t r) { run.replicas[r] = run_scaling_replica(run, r); });
    return run;
}

// ---- estimators ----

WhiteNoiseStats white_noise_stats(const std::vector<std::vector<double>>& samples,
                                  const std::vector<TestFunction>& etas, double sigma2, const FrameGeometry& g,
                                  double t, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    if (samples.size() != etas.size()) throw UsageError("white_noise_stats: one sample set per test function");
    WhiteNoiseStats out;
    for (std::size_t i = 0; i < etas.size(); ++i) {
        WhiteNoiseReport r;
        r.eta = etas[i].tag();
        r.time = t;
        r.variance = variance_estimate(samples[i]);
        r.target = sigma2 * etas[i].l2_norm2();
        r.finite_n = field_variance_exact(etas[i], g, t, sigma2);
        r.ratio = {r.variance.value / r.target, r.variance.se / r.target, false};
        const auto m = mean_estimate(samples[i]);
        r.mean = m.value;
        r.mean_se = m.se;
        r.normality = jarque_bera(samples[i]);
        out.marginals.push_back(r);
    }
    for (auto [a, b] : pairs) {
        if (a >= etas.size() || b >= etas.size()) throw UsageError("white_noise_stats: pair index out of range");
        const auto& x = samples[a];
        const auto& y = samples[b];
        const double mx = mean_estimate(x).value, my = mean_estimate(y).value;
        std::vector<double> prod(x.size());
        for (std::size_t r = 0; r < x.size(); ++r) prod[r] = (x[r] - mx) * (y[r] - my);
        PairCovariance pc;
        pc.eta = etas[a].tag();
        pc.zeta = etas[b].tag();
        const auto e = mean_estimate(prod);
        const double corr = x.size() > 1 ? double(x.size()) / double(x.size() - 1) : 1.0;
        pc.covariance = {e.value * corr, e.se * corr, false};
        pc.target = sigma2 * inner_product(etas[a], etas[b]);
        pc.z = pc.covariance.se > 0 ? (pc.covariance.value - pc.target) / pc.covariance.se : 0.0;
        out.pairs.push_back(pc);
    }
    return out;
}

double sup_variance(const Potential& v, double slope, double lambda_lo, double lambda_hi, int points) {
    if (points < 1) throw UsageError("sup_variance: need at least one point");
    double best = 0.0;
    for (int i = 0; i < points; ++i) {
        const double lam = points == 1 ? lambda_lo : lambda_lo + (lambda_hi - lambda_lo) * i / (points - 1);
        TiltedMeasure mu(v, lam);
        auto F = [&](double u) { return v.first(u) - slope * u; };
        const double m = mu.expect(F);
        const double var = mu.expect([&](double u) {
            const double d = F(u) - m;
            return d * d;
        });
        best = std::max(best, var);
    }
    return best;
}

double g_norm2(const TestFunction& eta, const FrameGeometry& g, double T, int steps) {
    if (steps < 1) throw UsageError("g_norm2: steps must be positive");
    const double H = eta.support_half_width();
    const double h = T / steps;
    CompensatedSum total;
    for (int k = 0; k < steps; ++k) {
        const double t = (k + 0.5) * h;
        long long lo, hi;
        atom_range(eta, H, g, t, lo, hi);
        double s = 0;
        for (long long j = lo; j <= hi; ++j) {
            const double gj = 0.5 * g.n * (eta.value(atom(j + 1, g.n, g.c_n, t)) - eta.value(atom(j - 1, g.n, g.c_n, t)));
            s += gj * gj;
        }
        total.add(s * h);
    }
    return total.value();
}

namespace {

const EtaSeries& series(const ScalingRun& run, std::size_t r, std::size_t e) {
    if (e >= run.config.etas.size()) throw UsageError("scaling: test-function index out of range");
    return run.replicas[r].etas[e];
}

double run_T(const ScalingRun& run) { return run.times.back(); }

ResidualReport finish_residual(std::vector<double> x, double bound, std::size_t ell) {
    ResidualReport rep;
    bool all_zero = true;
    for (double& v : x) {
        all_zero = all_zero && v == 0.0;
        v *= v;
    }
    rep.second_moment = mean_estimate(x);
    rep.exact_zero = all_zero;
    rep.second_moment.exact = all_zero;
    rep.bound = bound;
    rep.ratio = bound > 0 ? rep.second_moment.value / bound : 0.0;
    rep.ell = ell;
    return rep;
}

}  // namespace

ResidualReport bg1_residual(const ScalingRun& run, std::size_t eta_index) {
    if (run.replicas.empty()) throw UsageError("bg1_residual: empty run");
    std::vector<double> x;
    for (std::size_t r = 0; r < run.replicas.size(); ++r) x.push_back(series(run, r, eta_index).bg1.back());
    const double n = run.geometry.n, T = run_T(run);
    const std::size_t ell = std::max<std::size_t>(1, std::size_t(std::floor(n * std::sqrt(T))));
    const double L = double(ell);
    const double bound = (L / (n * n) + T / L) * g_norm2(run.config.etas[eta_index], run.geometry, T) *
                         sup_variance(run.config.potential, 0.0);
    return finish_residual(std::move(x), bound, ell);
}

ResidualReport bg2_residual(const ScalingRun& run, std::size_t eta_index, std::size_t delta_index) {
    if (run.replicas.empty()) throw UsageError("bg2_residual: empty run");
    if (delta_index >= run.block_lengths.size()) throw UsageError("bg2_residual: delta index out of range");
    std::vector<double> x;
    for (std::size_t r = 0; r < run.replicas.size(); ++r) x.push_back(series(run, r, eta_index).bg2[delta_index].back());
    const double n = run.geometry.n, T = run_T(run);
    const std::size_t ell = run.block_lengths[delta_index];
    const double L = double(ell);
    const double bound = (L / (n * n) + T / (L * L)) * g_norm2(run.config.etas[eta_index], run.geometry, T) *
                         sup_variance(run.config.potential, run.coeffs.d_phi);
    return finish_residual(std::move(x), bound, ell);
}

NonlinearityReport nonlinearity_estimate(const ScalingRun& run, std::size_t eta_index, std::size_t delta_index) {
    if (delta_index >= run.block_lengths.size()) throw UsageError("nonlinearity_estimate: delta index out of range");
    NonlinearityReport rep;
    rep.times = run.times;
    for (std::size_t k = 0; k < run.times.size(); ++k) {
        std::vector<double> x;
        for (std::size_t r = 0; r < run.replicas.size(); ++r) x.push_back(series(run, r, eta_index).nl[delta_index][k]);
        const auto m = mean_estimate(x);
        rep.mean.push_back(m.value);
        rep.mean_se.push_back(m.se);
    }
    for (std::size_t r = 0; r < run.replicas.size(); ++r)
        rep.identity_error = std::max(rep.identity_error, series(run, r, eta_index).nl_identity_error);
    return rep;
}

EnergyResidualReport energy_residual(const ScalingRun& run, std::size_t eta_index, std::size_t delta_index) {
    if (delta_index >= run.block_lengths.size()) throw UsageError("energy_residual: delta index out of range");
    EnergyResidualReport rep;
    rep.times = run.times;
    rep.coefficient = 0.5 * run.coeffs.dd_phi;
    for (std::size_t k = 0; k < run.times.size(); ++k) {
        std::vector<double> x;
        for (std::size_t r = 0; r < run.replicas.size(); ++r) {
            const auto& es = series(run, r, eta_index);
            const double R = es.A[k] + rep.coefficient * es.nl[delta_index][k];
            x.push_back(R * R);
        }
        const auto m = mean_estimate(x);
        rep.second_moment.push_back(m.value);
        rep.second_moment_se.push_back(m.se);
        rep.sup_second_moment = std::max(rep.sup_second_moment, m.value);
        if (k + 1 == run.times.size()) rep.at_T = m;
    }
    return rep;
}

std::vector<double> russo_vallois_qv(std::span<const double> series, double grid_dt, std::span<const double> deltas) {
    if (!(grid_dt > 0)) throw UsageError("russo_vallois_qv: grid step must be positive");
    if (series.size() < 2) throw UsageError("russo_vallois_qv: series too short");
    std::vector<long long> lags;
    long long lag_max = 0;
    for (double d : deltas) {
        const double m = d / grid_dt;
        if (!(d > 0) || std::abs(m - std::round(m)) > 1e-9 * std::max(1.0, m))
            throw UsageError("russo_vallois_qv: delta must be a positive multiple of the grid step");
        lags.push_back(std::llround(m));
        lag_max = std::max(lag_max, lags.back());
    }
    const long long last = (long long)series.size() - 1 - lag_max;
    if (last < 1) throw UsageError("russo_vallois_qv: delta too large for the series");
    std::vector<double> out;
    for (std::size_t i = 0; i < lags.size(); ++i) {
        const long long m = lags[i];
        const double d = double(m) * grid_dt;
        CompensatedSum s;
        for (long long k = 0; k < last; ++k) {
            const double inc = series[std::size_t(k + m)] - series[std::size_t(k)];
            s.add(inc * inc / d * grid_dt);
        }
        out.push_back(s.value());
    }
    return out;
}

RvQvReport russo_vallois_report(const ScalingRun& run, std::size_t eta_index, bool martingale,
                                 std::span<const double> deltas) {
    if (run.replicas.empty()) throw UsageError("russo_vallois_report: empty run");
    RvQvReport rep;
    rep.deltas.assign(deltas.begin(), deltas.end());
    const double grid = run.times[1] - run.times[0];
    double dmax = 0;
    for (double d : deltas) dmax = std::max(dmax, d);
    rep.horizon = run.times.back() - std::round(dmax / grid) * grid;
    std::vector<std::vector<double>> per(deltas.size());
    for (std::size_t r = 0; r < run.replicas.size(); ++r) {
        const auto& es = series(run, r, eta_index);
        const auto q = russo_vallois_qv(martingale ? es.M : es.A, grid, deltas);
        for (std::size_t i = 0; i < q.size(); ++i) per[i].push_back(q[i]);
    }
    for (auto& p : per) {
        const auto m = mean_estimate(p);
        rep.qv.push_back(m.value);
        rep.qv_se.push_back(m.se);
    }
    rep.fit = loglog_slope(rep.deltas, rep.qv, rep.qv_se);
    return rep;
}

SplitReport split_report(const ScalingRun& run) {
    SplitReport rep;
    for (const auto& tr : run.replicas)
        for (const auto& es : tr.etas) {
            rep.max_split_error = std::max(rep.max_split_error, es.split_error);
            rep.max_nl_identity_error = std::max(rep.max_nl_identity_error, es.nl_identity_error);
        }
    return rep;
}

QvReport martingale_qv_report(const ScalingRun& run, std::size_t eta_index) {
    if (run.replicas.empty()) throw UsageError("martingale_qv_report: empty run");
    QvReport rep;
    rep.accumulator = series(run, 0, eta_index).qv.back();
    std::vector<double> p;
    for (std::size_t r = 0; r < run.replicas.size(); ++r) p.push_back(series(run, r, eta_index).qv_path.back());
    const auto m = mean_estimate(p);
    rep.path_mean = m.value;
    rep.path_se = m.se;
    rep.target = run_T(run) * run.config.etas[eta_index].grad_l2_norm2();
    rep.relative_error = std::abs(rep.accumulator - rep.target) / rep.target;
    return rep;
}

std::vector<CorrelationCell> micro_two_point(const ScalingRun& run, std::size_t n_bases, std::span<const double> offsets,
                                             std::span<const int> lag_records) {
    const std::size_t no = offsets.size();
    if (n_bases == 0 || no == 0 || run.config.probes.size() != n_bases * no)
        throw UsageError("micro_two_point: probes must be laid out as bases x offsets");
    if (offsets[0] != 0.0) throw UsageError("micro_two_point: first offset must be 0");
    if (run.replicas.empty()) throw UsageError("micro_two_point: empty run");
    const int R = int(run.times.size()) - 1;
    std::vector<CorrelationCell> out;
    for (int lag : lag_records) {
        if (lag < 0 || lag > R) throw UsageError("micro_two_point: lag out of range");
        for (std::size_t o = 0; o < no; ++o) {
            std::vector<double> per;
            for (const auto& tr : run.replicas) {
                double s = 0;
                long long cnt = 0;
                for (std::size_t b = 0; b < n_bases; ++b) {
                    const auto& moved = tr.probes[b * no + o];
                    const auto& ref = tr.probes[b * no];
                    for (int k = 0; k + lag <= R; ++k) {
                        s += moved[std::size_t(k + lag)] * ref[std::size_t(k)];
                        ++cnt;
                    }
                }
                per.push_back(s / double(cnt));
            }
            CorrelationCell c;
            c.x = offsets[o];
            c.t = run.times[std::size_t(lag)];
            c.value = mean_estimate(per);
            out.push_back(c);
        }
    }
    return out;
}

}  // namespace kpzlab
