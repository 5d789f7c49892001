#include "kpzlab/harness/summary.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "kpzlab/core/errors.hpp"

namespace kpzlab {

double compensated_sum(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s.add(x);
    return s.value();
}

void RunningStats::add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / double(n_);
    m2_ += d * (x - mean_);
}

double RunningStats::variance() const { return n_ > 1 ? m2_ / double(n_ - 1) : 0.0; }

double RunningStats::stderr_mean() const { return n_ > 1 ? std::sqrt(variance() / double(n_)) : 0.0; }

Estimate mean_estimate(std::span<const double> xs) {
    RunningStats s;
    for (double x : xs) s.add(x);
    return {s.mean(), s.stderr_mean(), false};
}

Estimate variance_estimate(std::span<const double> xs) {
    const std::size_t n = xs.size();
    if (n < 2) return {0.0, 0.0, false};
    const double mu = mean_estimate(xs).value;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = (x - mu) * (x - mu);
        m2 += d;
        m4 += d * d;
    }
    m2 /= double(n);
    m4 /= double(n);
    const double var = m2 * double(n) / double(n - 1);
    return {var, std::sqrt(std::max(m4 - m2 * m2, 0.0) / double(n)), false};
}

double student_t_quantile(double p, double dof) {
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, p);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y, std::span<const double> y_se) {
    if (x.size() != y.size() || (!y_se.empty() && y_se.size() != y.size()))
        throw UsageError("loglog_slope: length mismatch");
    SlopeFit fit;
    fit.points = x.size();
    if (x.size() < 3) {
        fit.verdict = "insufficient";
        return fit;
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] > 0) || !(y[i] > 0)) throw NumericError("loglog_slope: non-positive value");
    bool weighted = !y_se.empty();
    if (weighted)
        for (double s : y_se)
            if (!(s > 0)) weighted = false;

    std::vector<double> lx(x.size()), ly(x.size()), w(x.size(), 1.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        if (weighted) {
            const double rel = y_se[i] / y[i];
            w[i] = 1.0 / (rel * rel);
        }
    }
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * lx[i];
        sy += w[i] * ly[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (lx[i] - mx) * (lx[i] - mx);
        sxy += w[i] * (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0)) throw NumericError("loglog_slope: degenerate abscissae");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = ly[i] - fit.intercept - fit.slope * lx[i];
        rss += w[i] * r * r;
    }
    const double dof = double(x.size()) - 2.0;
    // residual-scaled covariance, so the interval reflects scatter about the line
    fit.slope_se = std::sqrt(rss / dof / sxx);
    const double t = student_t_quantile(0.975, dof);
    fit.ci_low = fit.slope - t * fit.slope_se;
    fit.ci_high = fit.slope + t * fit.slope_se;
    fit.verdict = "ok";
    return fit;
}

NormalityTest jarque_bera(std::span<const double> xs) {
    NormalityTest r;
    const double n = double(xs.size());
    if (xs.size() < 8) return r;
    double mu = 0;
    for (double x : xs) mu += x;
    mu /= n;
    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : xs) {
        const double d = x - mu;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    r.skewness = m3 / std::pow(m2, 1.5);
    r.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    r.statistic = n / 6.0 * (r.skewness * r.skewness + 0.25 * r.excess_kurtosis * r.excess_kurtosis);
    r.p_value = std::exp(-0.5 * r.statistic);
    return r;
}

double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(double(n)); }

}  // namespace kpzlab
