#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "kpzlab/harness/seed_stream.hpp"
#include "kpzlab/potentials/potential.hpp"
#include "kpzlab/thermo/thermo.hpp"

namespace kpzlab {

// Density sampled at origin + i*spacing.
struct GridDensity {
    double origin = 0.0;
    double spacing = 1.0;
    std::vector<double> values;
    double mass = 1.0;  // recorded trapezoid mass
    bool support_overflow = false;

    std::size_t size() const { return values.size(); }
    double x(std::size_t i) const { return origin + double(i) * spacing; }
    double trapezoid_mass() const;
    double mean() const;
    double variance() const;
    GridDensity normalized() const;
    // monotone cubic interpolation, zero outside the grid
    double value_at(double x) const;
    // boundary values below 1e-14 of the peak
    bool interior_ok() const;
};

struct GridOptions {
    double spacing_sigmas = 1e-3;
    double half_width_sigmas = 12.0;
    // a grid node is placed exactly at this point when set
    std::optional<double> anchor;
};

GridDensity single_site_grid(const TiltedMeasure& mu, const GridOptions& opts = {});

// Unstandardized N-fold convolution power (density of the plain sum), origin N*origin.
GridDensity convolution_power(const GridDensity& p, int N);
// density of the sum of independent variables on grids of equal spacing
GridDensity convolve(const GridDensity& a, const GridDensity& b);
// Density of (sum_i U_i - N mean)/sqrt(N var) with mean and var taken from p itself.
GridDensity standardize_sum(const GridDensity& sum_density, int N, double mean, double var);
GridDensity convolve_power(const GridDensity& p, int N);

double llt_gap(const Potential& v, double lambda, int N, const GridOptions& opts = {});

struct CanonicalSpec {
    int ell = 1;
    double rho = 0.0;
};

// Local observable on ell consecutive sites.
struct LocalObservable {
    int sites = 1;
    std::function<double(std::span<const double>)> value;
    // optional partial derivatives; central differences when empty
    std::function<void(std::span<const double>, std::span<double>)> gradient;

    double operator()(std::span<const double> u) const { return value(u); }
    void grad(std::span<const double> u, std::span<double> out) const;
};

LocalObservable observable_u0();
LocalObservable observable_u0_squared();
LocalObservable observable_vprime(const Potential& v);

struct CanonicalOptions {
    // tilt used internally; h'(rho) when empty (lambda0 for the L2 integral)
    std::optional<double> tilt;
    // grid spacing in units of sigma; 1e-3 for ell = 1 and 2e-2 for ell = 2 when empty
    std::optional<double> spacing_sigmas;
    double half_width_sigmas = 12.0;
    int l2_points = 401;
    double l2_half_width = 6.0;  // in units of sigma/sqrt(N)
};

double canonical_expectation(const LocalObservable& F, const CanonicalSpec& spec, int N, const Potential& v,
                             double lambda0, const CanonicalOptions& opts = {});

// phi_F(rho) = E_{h'(rho)}[F] and two rho-derivatives at rho = rho'(lambda)
struct GrandCanonicalExpansion {
    double rho = 0.0;
    double sigma2 = 1.0;
    double m3 = 0.0;
    double phi = 0.0;
    double d_phi = 0.0;
    double dd_phi = 0.0;
    double e_f_dev = 0.0;   // E[F (S - ell rho)]
    double e_f_dev2 = 0.0;  // E[F (S - ell rho)^2]
};

GrandCanonicalExpansion grand_canonical_expansion(const LocalObservable& F, const Potential& v, double lambda);

// (1 + l/2N) phi + (m3/(2N sigma^4)) E[F dev] - E[F dev^2]/(2N sigma^2)  and  phi - sigma^2/(2N) phi''
struct SecondOrderForms {
    double cumulant_form = 0.0;
    double derivative_form = 0.0;
};
SecondOrderForms second_order_forms(const GrandCanonicalExpansion& g, int ell, int N);

struct EquivalenceResidual {
    double psi = 0.0;
    double pointwise = 0.0;
    double l2 = 0.0;
    GrandCanonicalExpansion expansion;
};

EquivalenceResidual equivalence_residual(const LocalObservable& F, int ell, int N, const Potential& v, double lambda0,
                                         const CanonicalOptions& opts = {});

struct SamplerOptions {
    double initial_width = 1.0;
    int warmup_batches = 40;
    int batch_size = 200;
    double target_low = 0.3;
    double target_high = 0.5;
};

// Metropolis moves on random pairs (u_i + d, u_j - d). The state is kept in fixed point
// (2^-40 ticks) so the sum is conserved exactly.
class CanonicalSampler {
public:
    static constexpr double kTick = 0x1.0p-40;

    CanonicalSampler(Potential v, CanonicalSpec spec, double lambda_ref, SeedStream rng,
                     const SamplerOptions& opts = {});

    // one sweep = ell proposals
    void sweep();
    std::vector<double> draw(int sweeps);
    std::vector<double> state() const;
    std::int64_t tick_sum() const;
    double width() const { return width_; }
    double acceptance_rate() const;
    double warmup_acceptance() const { return warmup_acceptance_; }

private:
    bool propose();
    double log_p(double u) const { return lambda_ * u - v_.value(u); }

    Potential v_;
    CanonicalSpec spec_;
    double lambda_;
    SeedStream rng_;
    std::vector<std::int64_t> ticks_;
    double width_;
    double warmup_acceptance_ = 0.0;
    std::uint64_t proposals_ = 0, accepted_ = 0;
};

std::vector<double> canonical_sampler(const Potential& v, const CanonicalSpec& spec, double lambda_ref, int sweeps,
                                      SeedStream rng);

struct PoincareBudget {
    int draws = 20000;
    int sweeps_between = 5;
    int burn_in_sweeps = 200;
    int batches = 20;
    double lambda_ref = 0.0;
};

struct PoincareReport {
    double variance = 0.0;
    double variance_se = 0.0;
    double dirichlet = 0.0;
    double dirichlet_se = 0.0;
    double ratio = 0.0;
    double ratio_se = 0.0;
    double constant = 0.0;  // ratio / ell^2
    bool infinite = false;
    double acceptance = 0.0;
};

PoincareReport poincare_ratio(const LocalObservable& F, const CanonicalSpec& spec, const Potential& v,
                              const PoincareBudget& budget, SeedStream rng);

}  // namespace kpzlab
