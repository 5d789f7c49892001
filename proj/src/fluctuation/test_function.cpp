#include "kpzlab/fluctuation/test_function.hpp"

#include <array>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <charconv>
#include <cmath>
#include <regex>
#include <numbers>
#include <vector>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/thermo/thermo.hpp"

namespace kpzlab {

namespace {

using Poly = std::vector<double>;

Poly he_coeffs(int k) {
    Poly a{1.0}, b{0.0, 1.0};
    if (k == 0) return a;
    for (int j = 1; j < k; ++j) {
        Poly c(std::size_t(j) + 2, 0.0);
        for (std::size_t i = 0; i < b.size(); ++i) c[i + 1] += b[i];
        for (std::size_t i = 0; i < a.size(); ++i) c[i] -= double(j) * a[i];
        a = b;
        b = c;
    }
    return b;
}

// int He_j(y) He_k(y) exp(-y^2) dy
double gauss_product_integral(int j, int k) {
    const Poly p = he_coeffs(j), q = he_coeffs(k);
    double s = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a)
        for (std::size_t b = 0; b < q.size(); ++b) {
            const std::size_t m = a + b;
            if (m % 2) continue;
            s += p[a] * q[b] * std::tgamma(double(m + 1) / 2);
        }
    return s;
}

}  // namespace

TestFunction TestFunction::hermite(double center, double width, int order) {
    if (!(width > 0)) throw UsageError("test function: width must be positive");
    if (order < 0 || order > 4) throw UsageError("test function: hermite order must be in 0..4");
    TestFunction t;
    t.family_ = order == 0 ? TestFamily::gaussian_bump : TestFamily::hermite_function;
    t.center_ = center;
    t.width_ = width;
    t.order_ = order;
    // eta' = -He_{k+1} e^{-y^2/2} / w, eta'' = He_{k+2} e^{-y^2/2} / w^2
    t.l2_ = width * gauss_product_integral(order, order);
    t.grad_l2_ = gauss_product_integral(order + 1, order + 1) / width;
    t.lap_l2_ = gauss_product_integral(order + 2, order + 2) / (width * width * width);
    return t;
}

TestFunction TestFunction::gaussian(double center, double width) { return hermite(center, width, 0); }

namespace {
std::string shortest(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}
}  // namespace

std::string TestFunction::tag() const {
    if (order_ == 0) return "gaussian(c=" + shortest(center_) + ",w=" + shortest(width_) + ")";
    return "hermite(c=" + shortest(center_) + ",w=" + shortest(width_) + ",k=" + std::to_string(order_) + ")";
}

TestFunction test_function_from_tag(const std::string& tag) {
    static const std::regex g(R"(\s*gaussian\(c=([^,]+),w=([^)]+)\)\s*)");
    static const std::regex h(R"(\s*hermite\(c=([^,]+),w=([^,]+),k=(\d)\)\s*)");
    std::smatch m;
    try {
        if (std::regex_match(tag, m, g)) return TestFunction::gaussian(std::stod(m[1]), std::stod(m[2]));
        if (std::regex_match(tag, m, h)) return TestFunction::hermite(std::stod(m[1]), std::stod(m[2]), std::stoi(m[3]));
    } catch (const std::logic_error& e) {
        throw ConfigError("test function '" + tag + "': " + e.what());
    }
    throw ConfigError("test function: cannot parse '" + tag + "'");
}

double TestFunction::value(double x) const {
    const double y = (x - center_) / width_;
    const double g = std::exp(-0.5 * y * y);
    return order_ == 0 ? g : kpzlab::hermite(order_, y) * g;
}

double TestFunction::grad(double x) const {
    const double y = (x - center_) / width_;
    return -kpzlab::hermite(order_ + 1, y) * std::exp(-0.5 * y * y) / width_;
}

double TestFunction::lap(double x) const {
    const double y = (x - center_) / width_;
    return kpzlab::hermite(order_ + 2, y) * std::exp(-0.5 * y * y) / (width_ * width_);
}

std::complex<double> TestFunction::fourier(double q) const {
    const double s = q * width_;
    std::complex<double> f = width_ * std::sqrt(2 * std::numbers::pi) * std::exp(-0.5 * s * s);
    for (int k = 0; k < order_; ++k) f *= std::complex<double>(0, -s);
    return f * std::exp(std::complex<double>(0, -q * center_));
}

double TestFunction::support_half_width(double tol) const {
    // polynomial factor bounded by (|y|+order)^order; solve crudely upward
    double y = std::sqrt(-2 * std::log(tol));
    while (std::pow(y + order_, order_) * std::exp(-0.5 * y * y) > tol) y += 0.25;
    return y * width_;
}

double TestFunction::decay_constant() const {
    const double h = support_half_width(1e-18) + std::abs(center_);
    double k = 0.0;
    const int m = 20000;
    for (int i = 0; i <= m; ++i) {
        const double x = -h + 2 * h * i / m;
        k = std::max(k, std::pow(1 + std::abs(x), 4) * std::abs(value(x)));
    }
    return k;
}

double inner_product(const TestFunction& a, const TestFunction& b) {
    const double lo = std::min(a.center() - a.support_half_width(1e-17), b.center() - b.support_half_width(1e-17));
    const double hi = std::max(a.center() + a.support_half_width(1e-17), b.center() + b.support_half_width(1e-17));
    auto f = [&](double x) { return a.value(x) * b.value(x); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 25, 1e-13);
}

}  // namespace kpzlab
