#include <algorithm>
#include <cmath>
#include <complex>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/core/fft.hpp"
#include "kpzlab/ensembles/ensembles.hpp"

namespace kpzlab {

double GridDensity::trapezoid_mass() const {
    if (values.size() < 2) return 0.0;
    double s = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) s += values[i];
    return s * spacing;
}

double GridDensity::mean() const {
    double s = 0, m = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s += values[i];
        m += values[i] * x(i);
    }
    return m / s;
}

double GridDensity::variance() const {
    const double mu = mean();
    double s = 0, v = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        s += values[i];
        v += values[i] * (x(i) - mu) * (x(i) - mu);
    }
    return v / s;
}

GridDensity GridDensity::normalized() const {
    GridDensity g = *this;
    const double m = trapezoid_mass();
    if (!(m > 0)) throw NumericError("grid density: zero mass");
    for (double& v : g.values) v /= m;
    g.mass = 1.0;
    return g;
}

bool GridDensity::interior_ok() const {
    if (values.empty()) return false;
    const double peak = *std::max_element(values.begin(), values.end());
    return values.front() < 1e-14 * peak && values.back() < 1e-14 * peak;
}

double GridDensity::value_at(double t) const {
    const double s = (t - origin) / spacing;
    if (s < 0 || s > double(values.size() - 1)) return 0.0;
    const std::size_t n = values.size();
    std::size_t i = std::min(std::size_t(s), n - 2);
    const double f = s - double(i);
    auto slope = [&](std::size_t k) {
        // Fritsch-Carlson harmonic-mean slope on a uniform grid, in units of the grid step
        if (k == 0) return values[1] - values[0];
        if (k == n - 1) return values[n - 1] - values[n - 2];
        const double a = values[k] - values[k - 1], b = values[k + 1] - values[k];
        if (a * b <= 0) return 0.0;
        return 2 * a * b / (a + b);
    };
    const double y0 = values[i], y1 = values[i + 1], d0 = slope(i), d1 = slope(i + 1);
    const double f2 = f * f, f3 = f2 * f;
    return (2 * f3 - 3 * f2 + 1) * y0 + (f3 - 2 * f2 + f) * d0 + (-2 * f3 + 3 * f2) * y1 + (f3 - f2) * d1;
}

GridDensity single_site_grid(const TiltedMeasure& mu, const GridOptions& opts) {
    const double sd = std::sqrt(mu.sigma2());
    const double h = opts.spacing_sigmas * sd;
    const double lo = mu.mean() - opts.half_width_sigmas * sd, hi = mu.mean() + opts.half_width_sigmas * sd;
    double origin = lo;
    if (opts.anchor) origin = *opts.anchor - std::ceil((*opts.anchor - lo) / h) * h;
    const auto m = std::size_t(std::floor((hi - origin) / h)) + 1;
    GridDensity g;
    g.origin = origin;
    g.spacing = h;
    g.values.resize(m);
    for (std::size_t i = 0; i < m; ++i) g.values[i] = mu.density(origin + double(i) * h);
    g.mass = g.trapezoid_mass();
    g = g.normalized();
    g.support_overflow = !g.interior_ok();
    return g;
}

GridDensity convolution_power(const GridDensity& p, int N) {
    if (N < 1) throw UsageError("convolution power: N must be >= 1");
    if (!p.interior_ok())
        throw NumericError("convolution power: input support reaches the grid boundary; use a larger grid");
    if (N == 1) return p;
    const std::size_t m = p.size();
    const std::size_t len = std::size_t(N) * (m - 1) + 1;
    const std::size_t L = good_fft_size(len);
    RealFft fft(L);
    std::vector<double> in(m);
    for (std::size_t i = 0; i < m; ++i) in[i] = p.values[i] * p.spacing;
    std::vector<std::complex<double>> spec(fft.spectrum_size());
    fft.forward(in, spec);
    for (auto& c : spec) {
        std::complex<double> r(1.0, 0.0), b = c;
        for (int e = N; e > 0; e >>= 1) {
            if (e & 1) r *= b;
            b *= b;
        }
        c = r;
    }
    std::vector<double> out(L);
    fft.inverse(spec, out);
    GridDensity g;
    g.origin = double(N) * p.origin;
    g.spacing = p.spacing;
    g.values.resize(len);
    const double scale = 1.0 / (double(L) * p.spacing);
    for (std::size_t i = 0; i < len; ++i) g.values[i] = std::max(out[i] * scale, 0.0);
    g.mass = g.trapezoid_mass();
    // zero padding to the full support length rules out wrap-around
    g.support_overflow = false;
    return g;
}

GridDensity convolve(const GridDensity& a, const GridDensity& b) {
    if (std::abs(a.spacing - b.spacing) > 1e-12 * a.spacing) throw UsageError("convolve: spacings differ");
    const std::size_t len = a.size() + b.size() - 1;
    RealFft fft(good_fft_size(len));
    std::vector<double> in(a.size());
    std::vector<std::complex<double>> sa(fft.spectrum_size()), sb(fft.spectrum_size());
    for (std::size_t i = 0; i < a.size(); ++i) in[i] = a.values[i] * a.spacing;
    fft.forward(in, sa);
    in.assign(b.size(), 0.0);
    for (std::size_t i = 0; i < b.size(); ++i) in[i] = b.values[i] * b.spacing;
    fft.forward(in, sb);
    for (std::size_t k = 0; k < sa.size(); ++k) sa[k] *= sb[k];
    std::vector<double> out(fft.size());
    fft.inverse(sa, out);
    GridDensity g;
    g.origin = a.origin + b.origin;
    g.spacing = a.spacing;
    g.values.resize(len);
    const double scale = 1.0 / (double(fft.size()) * a.spacing);
    for (std::size_t i = 0; i < len; ++i) g.values[i] = std::max(out[i] * scale, 0.0);
    g.mass = g.trapezoid_mass();
    return g;
}

GridDensity standardize_sum(const GridDensity& s, int N, double mean, double var) {
    const double sc = std::sqrt(double(N) * var);
    GridDensity g;
    g.origin = (s.origin - double(N) * mean) / sc;
    g.spacing = s.spacing / sc;
    g.values.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) g.values[i] = s.values[i] * sc;
    g.mass = g.trapezoid_mass();
    g = g.normalized();
    g.support_overflow = s.support_overflow;
    return g;
}

GridDensity convolve_power(const GridDensity& p, int N) {
    return standardize_sum(convolution_power(p, N), N, p.mean(), p.variance());
}

double llt_gap(const Potential& v, double lambda, int N, const GridOptions& opts) {
    if (N < 2) throw UsageError("llt_gap: N must be >= 2");
    TiltedMeasure mu(v, lambda);
    const ThermoProfile prof = profile_of(mu, 4);
    const GridDensity f = convolve_power(single_site_grid(mu, opts), N);
    const EdgeworthExpansion e(prof.sigma2, prof.m[3], prof.m[4], N);
    double gap = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) gap = std::max(gap, std::abs(f.values[i] - e.density(f.x(i))));
    return gap;
}

}  // namespace kpzlab
