#include "kpzlab/core/pchip.hpp"

#include <algorithm>
#include <cmath>

#include "kpzlab/core/errors.hpp"

namespace kpzlab {

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw UsageError("pchip: need at least two knots of matching length");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw UsageError("pchip: knots must be strictly increasing");
    std::vector<double> h(n - 1), s(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        s[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    d_.assign(n, 0.0);
    if (n == 2) {
        d_[0] = d_[1] = s[0];
        return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (s[i - 1] * s[i] <= 0) continue;
        const double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
        d_[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
    }
    auto end_slope = [](double h0, double h1, double s0, double s1) {
        double d = ((2 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if (d * s0 <= 0) return 0.0;
        if (s0 * s1 <= 0 && std::abs(d) > 3 * std::abs(s0)) return 3 * s0;
        return d;
    };
    d_[0] = end_slope(h[0], h[1], s[0], s[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
}

double Pchip::operator()(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const std::size_t i = std::size_t(std::upper_bound(x_.begin(), x_.end(), t) - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    const double s = (t - x_[i]) / h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y_[i] + (s3 - 2 * s2 + s) * h * d_[i] + (-2 * s3 + 3 * s2) * y_[i + 1] +
           (s3 - s2) * h * d_[i + 1];
}

}  // namespace kpzlab
