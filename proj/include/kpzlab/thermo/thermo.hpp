#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "kpzlab/potentials/potential.hpp"

namespace kpzlab {

struct QuadratureOptions {
    double initial_half_width = 12.0;  // in units of sigma
    int max_doublings = 6;
    double tail_tolerance = 1e-14;     // relative to Z
    double abs_tolerance = 1e-12;
    int max_panels = 20000;
};

// p_lambda(u) = exp(lambda u - V(u)) / Z with a cached Gauss-Kronrod table over
// [rho' - w sigma, rho' + w sigma]. Immutable after construction.
class TiltedMeasure {
public:
    TiltedMeasure(Potential v, double lambda, QuadratureOptions opts = {});

    const Potential& potential() const { return v_; }
    double lambda() const { return lambda_; }
    double log_z() const { return log_z_; }
    double z() const { return std::exp(log_z_); }
    double mean() const { return mean_; }
    double sigma2() const { return sigma2_; }
    double window_lo() const { return lo_; }
    double window_hi() const { return hi_; }
    double tail_mass() const { return tail_; }

    double log_density(double u) const { return lambda_ * u - v_.value(u) - log_z_; }
    double density(double u) const { return std::exp(log_density(u)); }

    // nodes and normalized weights: E[f] = sum w_i f(x_i)
    std::span<const double> nodes() const { return x_; }
    std::span<const double> weights() const { return w_; }

    template <class F>
    double expect(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < x_.size(); ++i) s += w_[i] * f(x_[i]);
        return s;
    }
    // two independent sites
    template <class F>
    double expect2(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < x_.size(); ++i) {
            double inner = 0.0;
            for (std::size_t j = 0; j < x_.size(); ++j) inner += w_[j] * f(x_[i], x_[j]);
            s += w_[i] * inner;
        }
        return s;
    }

private:
    void build(double center, double scale, double half_width, double log_shift);

    Potential v_;
    double lambda_;
    QuadratureOptions opts_;
    double log_z_ = 0.0;
    double mean_ = 0.0;
    double sigma2_ = 1.0;
    double lo_ = 0.0, hi_ = 0.0;
    double tail_ = 0.0;
    std::vector<double> x_, w_;
};

struct ThermoProfile {
    double lambda = 0.0;
    double Z = 0.0;
    double rho = 0.0;        // log Z
    double rho_prime = 0.0;  // mean
    double sigma2 = 0.0;
    std::array<double, 7> m{};      // centered moments, m[2] = sigma2
    std::array<double, 5> kappa{};  // cumulants 1..4
    int k_max = 4;
    double mean_vprime = 0.0;
    double var_vprime = 0.0;
    double mean_vsecond = 0.0;
    double m3() const { return m[3]; }
    double m4() const { return m[4]; }
};

struct LogPartition {
    double Z;
    double rho;
};

LogPartition log_partition(const Potential& v, double lambda, const QuadratureOptions& opts = {});
ThermoProfile moments(const Potential& v, double lambda, int k_max = 4, const QuadratureOptions& opts = {});
ThermoProfile profile_of(const TiltedMeasure& mu, int k_max = 6);

struct TiltOptions {
    double tolerance = 1e-12;
    int max_doublings = 60;
    int max_iterations = 200;
};

// h'(rho_target): the lambda with rho'(lambda) = rho_target
double tilt_for_mean(const Potential& v, double rho_target, const TiltOptions& opts = {});

struct BurgersCoefficients {
    double lambda0 = 0.0;
    double rho_prime = 0.0;
    double sigma2 = 1.0;
    double m3 = 0.0;
    double nu = 0.5;
    double b = 0.0;       // equation term -b grad(u^2)
    double d_phi = 1.0;   // d/drho phi_{V'} = 1/sigma2
    double dd_phi = 0.0;  // d2/drho2 phi_{V'} = -m3/sigma^6
    double c_n(double n) const { return std::sqrt(n) / sigma2; }
};

BurgersCoefficients burgers_coefficients(const Potential& v, double lambda0);

// probabilists' Hermite polynomial, k in 0..6
double hermite(int k, double u);

class EdgeworthExpansion {
public:
    EdgeworthExpansion(double sigma2, double m3, double m4, int N);
    static EdgeworthExpansion of(const Potential& v, double lambda, int N);

    double r0(double z) const;
    double r1(double z) const;
    double r2(double z) const;
    double density(double z) const;
    int N() const { return N_; }

private:
    double sigma2_, m3_, m4_;
    int N_;
};

double edgeworth_density(const Potential& v, double lambda, int N, double u);

struct UniformBounds {
    double max_skew = 0.0;      // |m3|/sigma^3
    double max_kurt = 0.0;      // m4/sigma^4
    double max_sigma2 = 0.0;
    double max_inv_sigma2 = 0.0;
    bool all_finite = true;
};

UniformBounds uniform_bound_probe(const Potential& v, std::span<const double> lambdas);

}  // namespace kpzlab
