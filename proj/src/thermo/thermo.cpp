#include "kpzlab/thermo/thermo.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kpzlab/core/errors.hpp"

namespace kpzlab {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
using G7 = boost::math::quadrature::gauss<double, 7>;

// Kronrod and embedded Gauss estimates of int_a^b f, plus the 15 nodes/weights.
template <class F>
void gk_panel(F&& f, double a, double b, double& kronrod, double& gauss, std::array<double, 15>& xs,
              std::array<double, 15>& ws) {
    const auto& ka = GK::abscissa();
    const auto& kw = GK::weights();
    const auto& gw = G7::weights();
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double f0 = f(c);
    kronrod = kw[0] * f0;
    gauss = gw[0] * f0;
    xs[7] = c;
    ws[7] = kw[0] * h;
    for (std::size_t i = 1; i < ka.size(); ++i) {
        const double xl = c - h * ka[i], xr = c + h * ka[i];
        const double fl = f(xl), fr = f(xr);
        kronrod += kw[i] * (fl + fr);
        if (i % 2 == 0) gauss += gw[i / 2] * (fl + fr);
        xs[7 - i] = xl;
        xs[7 + i] = xr;
        ws[7 - i] = ws[7 + i] = kw[i] * h;
    }
    kronrod *= h;
    gauss *= h;
}

double find_mode_guess(const Potential& v, double lambda) {
    auto g = [&](double u) { return lambda - v.first(u); };
    double lo = -1.0, hi = 1.0;
    int k = 0;
    while (!(g(lo) > 0) && k++ < 80) lo *= 2;
    k = 0;
    while (!(g(hi) < 0) && k++ < 80) hi *= 2;
    if (!(g(lo) > 0) || !(g(hi) < 0))
        throw NumericError("tilted measure: lambda - V'(u) has no sign change; potential not confining");
    for (int i = 0; i < 200 && hi - lo > 1e-12 * (1 + std::abs(lo)); ++i) {
        const double m = 0.5 * (lo + hi);
        (g(m) > 0 ? lo : hi) = m;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TiltedMeasure::TiltedMeasure(Potential v, double lambda, QuadratureOptions opts)
    : v_(std::move(v)), lambda_(lambda), opts_(opts) {
    if (!std::isfinite(lambda)) throw UsageError("tilted measure: non-finite lambda");
    double c = find_mode_guess(v_, lambda_);
    double s = 1.0 / std::sqrt(std::max(v_.second(c), 1e-6));
    s = std::clamp(s, 1e-3, 1e3);
    const double shift = lambda_ * c - v_.value(c);

    double w = opts_.initial_half_width;
    for (int it = 0; it < 10; ++it) {
        build(c, s, w, shift);
        const double sd = std::sqrt(sigma2_);
        const bool moved = std::abs(mean_ - c) > 1e-3 * s || std::abs(sd / s - 1.0) > 1e-3;
        c = mean_;
        s = sd;
        if (!moved) break;
    }
    for (int d = 0;; ++d) {
        build(c, s, w, shift);
        if (tail_ < opts_.tail_tolerance) break;
        if (d >= opts_.max_doublings) {
            std::ostringstream os;
            os << "tilted measure: quadrature non-convergence, tail mass " << tail_ << " at half width " << w
               << " sigma (lambda=" << lambda_ << ", " << v_.tag() << ")";
            throw NumericError(os.str());
        }
        w *= 2;
    }
}

void TiltedMeasure::build(double c, double s, double half_width, double shift) {
    auto pt = [&](double u) { return std::exp(lambda_ * u - v_.value(u) - shift); };
    auto f = [&](double u) {
        const double z = (u - c) / s;
        return pt(u) * (1.0 + z * z * z * z * z * z);
    };
    lo_ = c - half_width * s;
    hi_ = c + half_width * s;
    const double span = hi_ - lo_;
    x_.clear();
    w_.clear();
    std::array<double, 15> xs{}, ws{};
    int panels = 0;
    auto refine = [&](auto&& self, double a, double b, int depth) -> void {
        double k, g;
        gk_panel(f, a, b, k, g, xs, ws);
        const double tol = opts_.abs_tolerance * (b - a) / span;
        if (std::abs(k - g) > tol && depth < 40 && panels < opts_.max_panels) {
            const double m = 0.5 * (a + b);
            self(self, a, m, depth + 1);
            self(self, m, b, depth + 1);
            return;
        }
        ++panels;
        for (int i = 0; i < 15; ++i) {
            x_.push_back(xs[i]);
            w_.push_back(ws[i]);
        }
    };
    const int initial = std::max(2, int(std::ceil(2 * half_width)));
    for (int i = 0; i < initial; ++i) refine(refine, lo_ + span * i / initial, lo_ + span * (i + 1) / initial, 0);

    double zt = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
        w_[i] *= pt(x_[i]);
        zt += w_[i];
    }
    if (!(zt > 0) || !std::isfinite(zt)) throw NumericError("tilted measure: partition function not finite");
    for (double& wi : w_) wi /= zt;
    log_z_ = shift + std::log(zt);
    mean_ = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) mean_ += w_[i] * x_[i];
    sigma2_ = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) sigma2_ += w_[i] * (x_[i] - mean_) * (x_[i] - mean_);

    // mass just outside the window, one window-width on each side
    double tail = 0.0;
    for (int side = 0; side < 2; ++side) {
        const double a = side == 0 ? lo_ - span : hi_;
        const int np = 8 * initial;
        for (int i = 0; i < np; ++i) {
            double k, g;
            gk_panel(pt, a + span * i / np, a + span * (i + 1) / np, k, g, xs, ws);
            tail += k;
        }
    }
    tail_ = tail / zt;
}

ThermoProfile profile_of(const TiltedMeasure& mu, int k_max) {
    if (k_max > 6 || k_max < 2) throw UsageError("moments: k_max must be in 2..6");
    ThermoProfile p;
    p.lambda = mu.lambda();
    p.rho = mu.log_z();
    p.Z = std::exp(p.rho);
    p.rho_prime = mu.mean();
    p.k_max = k_max;
    const double c = mu.mean();
    for (int k = 0; k <= k_max; ++k)
        p.m[k] = k == 0 ? 1.0 : mu.expect([&](double x) { return std::pow(x - c, k); });
    p.m[1] = 0.0;
    p.sigma2 = p.m[2];
    p.kappa[1] = c;
    p.kappa[2] = p.m[2];
    p.kappa[3] = k_max >= 3 ? p.m[3] : 0.0;
    p.kappa[4] = k_max >= 4 ? p.m[4] - 3 * p.m[2] * p.m[2] : 0.0;
    const Potential& v = mu.potential();
    p.mean_vprime = mu.expect([&](double x) { return v.first(x); });
    p.var_vprime = mu.expect([&](double x) {
        const double d = v.first(x) - p.mean_vprime;
        return d * d;
    });
    p.mean_vsecond = mu.expect([&](double x) { return v.second(x); });
    return p;
}

LogPartition log_partition(const Potential& v, double lambda, const QuadratureOptions& opts) {
    TiltedMeasure mu(v, lambda, opts);
    return {mu.z(), mu.log_z()};
}

ThermoProfile moments(const Potential& v, double lambda, int k_max, const QuadratureOptions& opts) {
    if (k_max > 6 || k_max < 2) throw UsageError("moments: k_max must be in 2..6");
    return profile_of(TiltedMeasure(v, lambda, opts), k_max);
}

double tilt_for_mean(const Potential& v, double target, const TiltOptions& opts) {
    if (!std::isfinite(target)) throw UsageError("tilt_for_mean: non-finite target");
    struct Eval {
        double f, d;
    };
    auto eval = [&](double lam) {
        TiltedMeasure mu(v, lam);
        return Eval{mu.mean() - target, mu.sigma2()};
    };
    double lam = v.first(target);
    Eval e = eval(lam);
    if (std::abs(e.f) <= opts.tolerance) return lam;

    // bracket by doubling steps away from the initial guess
    double lo = lam, hi = lam, flo = e.f, fhi = e.f;
    double step = 1.0;
    int k = 0;
    if (e.f < 0) {
        while (fhi < 0) {
            if (k++ >= opts.max_doublings) throw NumericError("tilt_for_mean: bracket expansion failed");
            lo = hi;
            flo = fhi;
            hi = lam + step;
            step *= 2;
            fhi = eval(hi).f;
        }
    } else {
        while (flo > 0) {
            if (k++ >= opts.max_doublings) throw NumericError("tilt_for_mean: bracket expansion failed");
            hi = lo;
            fhi = flo;
            lo = lam - step;
            step *= 2;
            flo = eval(lo).f;
        }
    }
    if (flo == 0) return lo;
    if (fhi == 0) return hi;

    double x = std::clamp(lam, lo, hi);
    e = eval(x);
    for (int it = 0; it < opts.max_iterations; ++it) {
        if (std::abs(e.f) <= opts.tolerance) return x;
        if (e.f < 0)
            lo = x;
        else
            hi = x;
        double next = x - e.f / e.d;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x) return x;
        x = next;
        e = eval(x);
    }
    if (std::abs(e.f) <= 1e3 * opts.tolerance) return x;
    throw NumericError("tilt_for_mean: no convergence");
}

BurgersCoefficients burgers_coefficients(const Potential& v, double lambda0) {
    if (v.family() == PotentialFamily::quadratic) {
        // Gaussian: exact
        BurgersCoefficients c;
        c.lambda0 = lambda0;
        c.rho_prime = lambda0 / v.a();
        c.sigma2 = 1.0 / v.a();
        c.nu = 0.5 * v.a();
        c.d_phi = v.a();
        return c;
    }
    const ThermoProfile p = moments(v, lambda0, 4);
    BurgersCoefficients c;
    c.lambda0 = lambda0;
    c.rho_prime = p.rho_prime;
    c.sigma2 = p.sigma2;
    c.m3 = p.m[3];
    const double s6 = p.sigma2 * p.sigma2 * p.sigma2;
    c.nu = 1.0 / (2.0 * p.sigma2);
    c.b = p.m[3] / (2.0 * s6);
    c.d_phi = 1.0 / p.sigma2;
    c.dd_phi = -p.m[3] / s6;
    return c;
}

double hermite(int k, double u) {
    if (k < 0 || k > 6) throw UsageError("hermite: k must be in 0..6");
    double h0 = 1.0, h1 = u;
    if (k == 0) return h0;
    for (int j = 1; j < k; ++j) {
        const double h2 = u * h1 - j * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

EdgeworthExpansion::EdgeworthExpansion(double sigma2, double m3, double m4, int N)
    : sigma2_(sigma2), m3_(m3), m4_(m4), N_(N) {
    if (N < 1) throw UsageError("edgeworth: N must be >= 1");
    if (!(sigma2 > 0)) throw UsageError("edgeworth: sigma2 must be positive");
}

EdgeworthExpansion EdgeworthExpansion::of(const Potential& v, double lambda, int N) {
    const ThermoProfile p = moments(v, lambda, 4);
    return EdgeworthExpansion(p.sigma2, p.m[3], p.m[4], N);
}

double EdgeworthExpansion::r0(double z) const { return std::exp(-0.5 * z * z) / std::sqrt(2 * std::numbers::pi); }

double EdgeworthExpansion::r1(double z) const {
    return r0(z) * m3_ / (6.0 * std::pow(sigma2_, 1.5)) * hermite(3, z);
}

double EdgeworthExpansion::r2(double z) const {
    const double s4 = sigma2_ * sigma2_;
    return r0(z) * ((m4_ - 3 * s4) / (24 * s4) * hermite(4, z) + m3_ * m3_ / (72 * s4 * sigma2_) * hermite(6, z));
}

double EdgeworthExpansion::density(double z) const {
    return r0(z) + r1(z) / std::sqrt(double(N_)) + r2(z) / double(N_);
}

double edgeworth_density(const Potential& v, double lambda, int N, double u) {
    return EdgeworthExpansion::of(v, lambda, N).density(u);
}

UniformBounds uniform_bound_probe(const Potential& v, std::span<const double> lambdas) {
    UniformBounds b;
    for (double lam : lambdas) {
        const ThermoProfile p = moments(v, lam, 4);
        const double s = std::sqrt(p.sigma2);
        const double vals[] = {std::abs(p.m[3]) / (s * s * s), p.m[4] / (p.sigma2 * p.sigma2), p.sigma2,
                               1.0 / p.sigma2};
        for (double x : vals)
            if (!std::isfinite(x)) b.all_finite = false;
        b.max_skew = std::max(b.max_skew, vals[0]);
        b.max_kurt = std::max(b.max_kurt, vals[1]);
        b.max_sigma2 = std::max(b.max_sigma2, vals[2]);
        b.max_inv_sigma2 = std::max(b.max_inv_sigma2, vals[3]);
    }
    return b;
}

}  // namespace kpzlab
