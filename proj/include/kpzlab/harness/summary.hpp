#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace kpzlab {

// Neumaier compensated accumulator.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (abs_(sum_) >= abs_(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    static double abs_(double x) { return x < 0 ? -x : x; }
    double sum_ = 0.0;
    double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);

// Welford.
class RunningStats {
public:
    void add(double x);
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;  // unbiased
    double stderr_mean() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Estimate {
    double value = 0.0;
    double se = 0.0;
    bool exact = false;
};

Estimate mean_estimate(std::span<const double> xs);
// unbiased variance with a delta-method standard error
Estimate variance_estimate(std::span<const double> xs);

struct SlopeFit {
    std::string verdict;  // "ok" or "insufficient"
    std::size_t points = 0;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Weighted least squares of log y on log x; weights 1/(se/y)^2 when standard errors are given
// and all positive, otherwise uniform. 95% interval from Student t with points-2 dof.
SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y,
                      std::span<const double> y_se = {});

double student_t_quantile(double p, double dof);
double normal_cdf(double z);

struct NormalityTest {
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double statistic = 0.0;
    double p_value = 1.0;
};

// Jarque-Bera against chi^2 with 2 dof.
NormalityTest jarque_bera(std::span<const double> xs);

// sup |F_n - F| for a sample (sorted inside) against a reference CDF.
template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf&& cdf);

double ks_critical_1pct(std::size_t n);

}  // namespace kpzlab

#include <algorithm>
#include <cmath>

namespace kpzlab {

template <class Cdf>
double ks_statistic(std::vector<double> xs, Cdf&& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, f - double(i) / n, double(i + 1) / n - f});
    }
    return d;
}

}  // namespace kpzlab
