#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kpzlab/dynamics/dynamics.hpp"
#include "kpzlab/fluctuation/test_function.hpp"
#include "kpzlab/harness/summary.hpp"
#include "kpzlab/thermo/thermo.hpp"

namespace kpzlab {

// Atoms sit at x_j = j/n + c_n t; site index is j mod n_sites. Positions are taken on the torus of
// length n_sites/n, unwrapped around the test function's center.
struct FrameGeometry {
    double n = 1.0;
    double c_n = 0.0;
    double rho_prime = 0.0;
    std::size_t n_sites = 0;
    double length() const { return double(n_sites) / n; }
};

FrameGeometry frame_geometry(double n, const BurgersCoefficients& bc, std::size_t n_sites);

// v^n_t(eta) = sum_k n^{-1/2} (u(k) - rho') eta(k/n + c_n t)
double field_eval(std::span<const double> u, const TestFunction& eta, const FrameGeometry& g, double t);
double field_eval(std::span<const double> u, const std::function<double(double)>& eta, const FrameGeometry& g,
                  double t, double center = 0.0);
// sigma2 n^{-1} sum_k eta(k/n + c_n t)^2
double field_variance_exact(const TestFunction& eta, const FrameGeometry& g, double t, double sigma2);
// n^{-1} sum_k |grad1_n eta(k/n + c_n t)|^2, the QV rate of M
double martingale_qv_rate(const TestFunction& eta, const FrameGeometry& g, double t);

// Q(l; u) at block start k: (mean of u(k..k+l-1) - rho')^2 - sigma2/l
double quadratic_field(std::span<const double> u, std::size_t k, std::size_t ell, double rho_prime, double sigma2);

struct ScalingConfig {
    Potential potential = Potential::perturbed(1.0, 0.3);
    double lambda0 = 0.0;
    double n = 16;
    double T = 0.1;   // macroscopic
    double dt = 0.02; // microscopic
    int replicas = 100;
    std::uint64_t seed = 1;
    std::vector<TestFunction> etas{TestFunction::gaussian(0.0, 0.25)};
    // evaluated only at record times, no decomposition
    std::vector<TestFunction> probes;
    std::vector<double> deltas{0.5};  // mollifier widths; delta * n must be a whole number
    int records = 64;
    bool accumulate = true;
    std::size_t n_sites = 0;  // 0: sized from the frame travel
    int trace_replicas = 4;
};

std::size_t scaling_lattice_size(const ScalingConfig& cfg, const BurgersCoefficients& bc);

// everything stored per record time r = 0..records
struct EtaSeries {
    std::vector<double> v, S, A, M;
    std::vector<double> qv;       // deterministic accumulator
    std::vector<double> qv_path;  // sum of squared realized increments
    std::vector<double> bg1;
    std::vector<std::vector<double>> bg2;  // [delta][record]
    std::vector<std::vector<double>> nl;   // [delta][record], block-average route
    double split_error = 0.0;              // max relative S+A+M identity error
    double nl_identity_error = 0.0;        // max relative block vs mollified error
};

struct ReplicaTrace {
    std::vector<EtaSeries> etas;
    std::vector<std::vector<double>> probes;  // [probe][record]
};

struct ScalingRun {
    ScalingConfig config;
    BurgersCoefficients coeffs;
    FrameGeometry geometry;
    double alpha = 0.0;
    double dt_macro = 0.0;
    long long steps = 0;
    int record_every = 1;
    std::vector<double> times;  // macroscopic record times
    std::vector<std::size_t> block_lengths;
    std::shared_ptr<const StationarySampler> sampler;
    std::vector<ReplicaTrace> replicas;
};

ScalingRun run_scaling(const ScalingConfig& cfg);

// one replica, exposed for tests
ReplicaTrace run_scaling_replica(const ScalingRun& setup, std::size_t replica);
ScalingRun prepare_scaling(const ScalingConfig& cfg);

struct WhiteNoiseReport {
    std::string eta;
    double time = 0.0;
    Estimate variance;
    double target = 0.0;      // sigma2 int eta^2
    double finite_n = 0.0;    // sigma2 n^{-1} sum eta^2
    Estimate ratio;           // variance / target
    double mean = 0.0, mean_se = 0.0;
    NormalityTest normality;
};

struct PairCovariance {
    std::string eta, zeta;
    Estimate covariance;
    double target = 0.0;
    double z = 0.0;
};

struct WhiteNoiseStats {
    std::vector<WhiteNoiseReport> marginals;
    std::vector<PairCovariance> pairs;
};

// samples[i][r]: v_t(eta_i) in replica r
WhiteNoiseStats white_noise_stats(const std::vector<std::vector<double>>& samples,
                                  const std::vector<TestFunction>& etas, double sigma2, const FrameGeometry& g,
                                  double t, const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

struct ResidualReport {
    Estimate second_moment;  // E[X_T^2]
    double bound = 0.0;
    double ratio = 0.0;      // estimate / bound
    std::size_t ell = 0;
    bool exact_zero = false;
};

// sup over a lambda window of var_lambda(F) for F = V'(u) - c u
double sup_variance(const Potential& v, double slope, double lambda_lo = -5, double lambda_hi = 5, int points = 41);
// int_0^T sum_k |grad2_n eta(k/n + c_n s)|^2 ds
double g_norm2(const TestFunction& eta, const FrameGeometry& g, double T, int steps = 256);

ResidualReport bg1_residual(const ScalingRun& run, std::size_t eta_index);
ResidualReport bg2_residual(const ScalingRun& run, std::size_t eta_index, std::size_t delta_index);

struct NonlinearityReport {
    std::vector<double> times;
    std::vector<double> mean;     // replica mean of the estimate
    std::vector<double> mean_se;
    double identity_error = 0.0;  // worst block vs mollified discrepancy
};

NonlinearityReport nonlinearity_estimate(const ScalingRun& run, std::size_t eta_index, std::size_t delta_index);

struct EnergyResidualReport {
    std::vector<double> times;
    std::vector<double> second_moment;  // E[R(t)^2]
    std::vector<double> second_moment_se;
    Estimate at_T;
    double sup_second_moment = 0.0;
    double coefficient = 0.0;  // dd_phi / 2
};

// R = A + (dd_phi/2) NL
EnergyResidualReport energy_residual(const ScalingRun& run, std::size_t eta_index, std::size_t delta_index);

struct RvQvReport {
    std::vector<double> deltas;
    std::vector<double> qv;
    std::vector<double> qv_se;
    double horizon = 0.0;  // integral runs over [0, horizon]
    SlopeFit fit;
};

// int_0^{t} (X_{s+d} - X_s)^2 / d ds on a uniform grid, t = grid end - max d
std::vector<double> russo_vallois_qv(std::span<const double> series, double grid_dt, std::span<const double> deltas);
RvQvReport russo_vallois_report(const ScalingRun& run, std::size_t eta_index, bool martingale,
                                 std::span<const double> deltas);

struct SplitReport {
    double max_split_error = 0.0;
    double max_nl_identity_error = 0.0;
};
SplitReport split_report(const ScalingRun& run);

struct QvReport {
    double accumulator = 0.0;   // at T
    double path_mean = 0.0;     // replica mean of realized QV
    double path_se = 0.0;
    double target = 0.0;        // T ||grad eta||^2
    double relative_error = 0.0;
};
QvReport martingale_qv_report(const ScalingRun& run, std::size_t eta_index);

// E[u_{s+t}(eta_{y+x}) u_s(eta_y)] from probe series laid out as [base][offset]
struct CorrelationCell {
    double x = 0.0, t = 0.0;
    Estimate value;
};
std::vector<CorrelationCell> micro_two_point(const ScalingRun& run, std::size_t n_bases, std::span<const double> offsets,
                                             std::span<const int> lag_records);

}  // namespace kpzlab
