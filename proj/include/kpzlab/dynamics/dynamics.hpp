#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "kpzlab/core/pchip.hpp"
#include "kpzlab/harness/seed_stream.hpp"
#include "kpzlab/potentials/potential.hpp"
#include "kpzlab/thermo/thermo.hpp"

namespace kpzlab {

enum class DiscreteOp { laplacian, grad1, grad2 };

// periodic lattice function
double apply_discrete_op(DiscreteOp op, std::span<const double> f, std::size_t i);
// function on Z, no wrapping
double apply_discrete_op(DiscreteOp op, const std::function<double(long long)>& f, long long i);
// mesh 1/n version on a real function: n^2, n, n/2 prefactors
double apply_scaled_op(DiscreteOp op, const std::function<double(double)>& f, double x, double n);

struct LatticeState {
    std::vector<double> u;
    double alpha = 0.0;
    Potential potential = Potential::quadratic();
    double lambda0 = 0.0;
    double time = 0.0;
    long long steps = 0;

    std::size_t size() const { return u.size(); }
};

// 1/2 Lap_D V'(u) + alpha Grad2_D V'(u)
void drift(const LatticeState& s, std::span<double> out);
std::vector<double> drift(const LatticeState& s);

struct StepOptions {
    bool with_drift = true;
    bool with_noise = true;
};

// u += drift dt + (xi_{i+1} - xi_i) sqrt(dt); the standard normals xi are copied to noise_out when given.
void em_step(LatticeState& s, double dt, SeedStream& rng, std::span<double> noise_out = {},
             const StepOptions& opts = {});
// same step with caller-provided standard normals
void em_step_with_noise(LatticeState& s, double dt, std::span<const double> xi, const StepOptions& opts = {});
// and with f = V'(u) already evaluated at the current state
void em_step_with_force(LatticeState& s, double dt, std::span<const double> xi, std::span<const double> f);

// inverse-CDF sampler for p_lambda
class StationarySampler {
public:
    explicit StationarySampler(const TiltedMeasure& mu, std::size_t cells = 1 << 14);
    double operator()(SeedStream& rng) const { return inverse_(rng.uniform()); }
    double cdf(double x) const;
    double mean() const { return mean_; }

private:
    Pchip inverse_;
    std::vector<double> x_, F_;
    double mean_;
};

LatticeState sample_stationary(std::size_t n_sites, const Potential& v, double lambda, SeedStream& rng);
LatticeState sample_stationary(std::size_t n_sites, const StationarySampler& sampler, const Potential& v,
                               double lambda, SeedStream& rng);

double sum_compensated(std::span<const double> u);

struct StationarityConfig {
    Potential potential = Potential::quadratic();
    double lambda = 0.0;
    double alpha = 0.0;
    std::size_t n_sites = 1024;
    double T = 10.0;
    double dt = 1e-3;
    int replicas = 200;
    std::uint64_t seed = 1;
    bool richardson = false;
};

struct ZCheck {
    std::string name;
    double time = 0.0;
    double estimate = 0.0;
    double target = 0.0;
    double se = 0.0;
    double z = 0.0;
};

struct StationarityReport {
    std::vector<ZCheck> checks;  // times 0 and T
    double max_abs_z_final = 0.0;
    double max_abs_z = 0.0;
    bool pass = false;  // |z| <= 3 for every check
    bool has_bias = false;
    double bias_dt = 0.0, bias_dt_se = 0.0;            // second-moment bias at dt
    double bias_half_dt = 0.0, bias_half_dt_se = 0.0;  // and at dt/2
    // coupled levels dt, dt/2, dt/4 on one Brownian path: gap_k = m2(level k) - m2(level k+1)
    double gap_dt = 0.0, gap_dt_se = 0.0;
    double gap_half_dt = 0.0, gap_half_dt_se = 0.0;
    double contrast = 0.0, contrast_se = 0.0;  // gap_dt - 2 gap_half_dt, paired
};

StationarityReport stationarity_report(const StationarityConfig& cfg);

// (u(i + offset) - rho')^power, or V'(u(i + offset)) when vprime is set
struct SiteObservable {
    int offset = 0;
    int power = 1;
    bool vprime = false;
    double operator()(std::span<const double> u, std::size_t i, double rho, const Potential& v) const;
};

struct ReversalConfig {
    Potential potential = Potential::quadratic();
    double lambda = 0.0;
    double alpha = 0.3;
    std::size_t n_sites = 64;
    double T = 1.0;
    double dt = 1e-2;
    int replicas = 2000;
    std::uint64_t seed = 1;
    SiteObservable F{0, 1, false};
    SiteObservable G{1, 1, false};
};

struct ReversalReport {
    double forward = 0.0;   // E[F(u_0) G(u_T)] under +alpha
    double backward = 0.0;  // E[G(u_0) F(u_T)] under -alpha
    double difference = 0.0;
    double se = 0.0;
    double z = 0.0;
    bool pass = false;
};

ReversalReport reversal_report(const ReversalConfig& cfg);

// sqrt(sum_j |u(center + j)|^2 |j|^{-r}), |0|^{-r} = 1
double weighted_norm(std::span<const double> u, double r, std::size_t center);

struct RefinementConfig {
    Potential potential = Potential::quadratic();
    double lambda = 0.0;
    double alpha = 0.0;
    std::size_t n_smallest = 128;
    int levels = 3;
    double r_prime = 2.0;
    double T = 10.0;
    double dt = 1e-2;
    int check_every = 10;
    std::uint64_t seed = 1;
};

struct RefinementReport {
    std::vector<std::size_t> sizes;
    std::vector<double> sup_differences;  // sizes[k] vs sizes[k+1]
    bool strictly_decreasing = false;
};

RefinementReport periodic_refinement_test(const RefinementConfig& cfg);

// ceil(n W + n^{3/2} T / sigma2, +20%) rounded up to a power of two
std::size_t lattice_size(double n, double support_width, double sigma2, double T_macro);

struct Checkpoint {
    LatticeState state;
    double dt = 0.0;
};

void write_checkpoint(const std::string& path, const LatticeState& s, double dt);
Checkpoint read_checkpoint(const std::string& path);
Potential potential_from_tag(const std::string& tag);

}  // namespace kpzlab
