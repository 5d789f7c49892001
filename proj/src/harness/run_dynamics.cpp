#include <algorithm>
#include <cmath>
#include <set>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/dynamics/dynamics.hpp"
#include "runners.hpp"

namespace kpzlab::detail {

namespace {

struct NoiseConservation {
    double max_drift = 0.0;
    Estimate var, cov;
};

NoiseConservation conservation_and_noise(const ExperimentConfig& c, const Potential& v, double alpha, Table& drift_table) {
    const double lam = c.num("model", "lambda0");
    const auto N = std::size_t(c.integer("dynamics", "n_sites"));
    const long long steps = c.integer("dynamics", "steps");
    const double dt = c.num("dynamics", "dt");
    auto init = seed_stream(c.uint("run", "seed"), 0, StreamTag::stationary_init);
    auto noise = seed_stream(c.uint("run", "seed"), 0, StreamTag::dynamics_noise);
    LatticeState s = sample_stationary(N, v, lam, init);
    s.alpha = alpha;
    const double sum0 = sum_compensated(s.u);
    double scale = 0;
    for (double x : s.u) scale += std::abs(x);

    std::vector<double> xi(N);
    RunningStats var, cov;
    NoiseConservation out;
    const long long every = std::max(1LL, steps / 10);
    drift_table.add({v.tag(), alpha, 0LL, sum0, 0.0});
    for (long long k = 1; k <= steps; ++k) {
        em_step(s, dt, noise, xi);
        double sv = 0, sc = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double d = xi[(i + 1) % N] - xi[i];
            const double d1 = xi[(i + 2) % N] - xi[(i + 1) % N];
            sv += d * d;
            sc += d * d1;
        }
        var.add(sv * dt / double(N));
        cov.add(sc * dt / double(N));
        if (k % every == 0 || k == steps) {
            for (double x : s.u)
                if (!std::isfinite(x)) throw BlowUpError("dynamics: non-finite lattice value", k);
            const double sum = sum_compensated(s.u);
            const double rel = std::abs(sum - sum0) / scale;
            out.max_drift = std::max(out.max_drift, rel);
            drift_table.add({v.tag(), alpha, k, sum, rel});
        }
    }
    out.var = {var.mean(), var.stderr_mean(), false};
    out.cov = {cov.mean(), cov.stderr_mean(), false};
    return out;
}

}  // namespace

void run_dynamics(const ExperimentConfig& c, RunArtifact& a) {
    const auto pots = config_potentials(c);
    const auto alphas = c.nums("dynamics", "alphas");
    const auto check_list = c.tags("dynamics", "checks");
    const std::set<std::string> checks(check_list.begin(), check_list.end());
    for (const auto& k : checks)
        if (k != "conservation" && k != "noise" && k != "stationarity" && k != "reversal" && k != "refinement")
            throw ConfigError("dynamics.checks: unknown check " + k);
    if (alphas.empty()) throw ConfigError("dynamics.alphas is empty");
    const double lam = c.num("model", "lambda0");
    const double dt = c.num("dynamics", "dt");
    const double z_max = c.num("dynamics", "z_max");
    const auto seed = c.uint("run", "seed");
    const double alpha_max = *std::max_element(alphas.begin(), alphas.end(), [](double x, double y) {
        return std::abs(x) < std::abs(y);
    });

    if (checks.count("conservation") || checks.count("noise")) {
        Table drift("conservation", {"potential", "alpha", "step", "sum", "relative_drift"});
        Table nt("noise", {"potential", "alpha", "quantity", "estimate", "se", "target", "z"});
        bool cons_ok = true, noise_ok = true;
        double worst_drift = 0, worst_z = 0;
        for (const auto& v : pots) {
            const auto r = conservation_and_noise(c, v, alpha_max, drift);
            worst_drift = std::max(worst_drift, r.max_drift);
            const double zv = (r.var.value - 2 * dt) / r.var.se;
            const double zc = (r.cov.value + dt) / r.cov.se;
            nt.add({v.tag(), alpha_max, std::string("var"), r.var.value, r.var.se, 2 * dt, zv});
            nt.add({v.tag(), alpha_max, std::string("adjacent_cov"), r.cov.value, r.cov.se, -dt, zc});
            worst_z = std::max({worst_z, std::abs(zv), std::abs(zc)});
        }
        const double tol = c.num("dynamics", "conservation_tol");
        cons_ok = worst_drift <= tol;
        noise_ok = worst_z <= z_max;
        a.tables.push_back(std::move(drift));
        a.tables.push_back(std::move(nt));
        if (checks.count("conservation"))
            a.verdicts.push_back({"conservation", cons_ok,
                                  "max relative drift " + fmt(worst_drift) + " (tol " + fmt(tol) + ")",
                                  {{"max_relative_drift", worst_drift}, {"tol", tol}}});
        if (checks.count("noise"))
            a.verdicts.push_back({"noise_covariance", noise_ok, "max |z| " + fmt(worst_z) + " (max " + fmt(z_max) + ")",
                                  {{"max_abs_z", worst_z}, {"z_max", z_max}}});
    }

    if (checks.count("stationarity")) {
        Table st("stationarity", {"potential", "alpha", "check", "time", "estimate", "target", "se", "z"});
        Table bias("richardson", {"potential", "alpha", "gap_dt", "gap_dt_se", "gap_half_dt", "gap_half_dt_se",
                                  "contrast", "contrast_se"});
        double worst = 0;
        for (const auto& v : pots)
            for (double al : alphas) {
                StationarityConfig sc;
                sc.potential = v;
                sc.lambda = lam;
                sc.alpha = al;
                sc.n_sites = std::size_t(c.integer("dynamics", "n_sites"));
                sc.T = c.num("dynamics", "T");
                sc.dt = dt;
                sc.replicas = int(c.integer("run", "replicas"));
                sc.seed = seed;
                const auto rep = stationarity_report(sc);
                for (const auto& z : rep.checks) st.add({v.tag(), al, z.name, z.time, z.estimate, z.target, z.se, z.z});
                if (rep.has_bias)
                    bias.add({v.tag(), al, rep.gap_dt, rep.gap_dt_se, rep.gap_half_dt, rep.gap_half_dt_se, rep.contrast,
                              rep.contrast_se});
                worst = std::max(worst, rep.max_abs_z);
            }
        a.tables.push_back(std::move(st));
        if (!bias.rows.empty()) a.tables.push_back(std::move(bias));
        a.verdicts.push_back({"stationarity", worst <= z_max, "max |z| " + fmt(worst) + " (max " + fmt(z_max) + ")",
                              {{"max_abs_z", worst}, {"z_max", z_max}}});
    }

    if (checks.count("reversal")) {
        Table rt("reversal", {"potential", "alpha", "forward", "backward", "difference", "se", "z"});
        double worst = 0;
        for (const auto& v : pots) {
            ReversalConfig rc;
            rc.potential = v;
            rc.lambda = lam;
            rc.alpha = alpha_max;
            rc.seed = seed;
            const auto r = reversal_report(rc);
            rt.add({v.tag(), alpha_max, r.forward, r.backward, r.difference, r.se, r.z});
            worst = std::max(worst, std::abs(r.z));
        }
        a.tables.push_back(std::move(rt));
        a.verdicts.push_back({"reversal", worst <= z_max, "max |z| " + fmt(worst), {{"max_abs_z", worst}}});
    }

    if (checks.count("refinement")) {
        Table ft("refinement", {"potential", "size", "next_size", "sup_difference"});
        bool ok = true;
        for (const auto& v : pots) {
            RefinementConfig rc;
            rc.potential = v;
            rc.lambda = lam;
            rc.alpha = alpha_max;
            rc.n_smallest = std::size_t(c.integer("dynamics", "refinement_sizes"));
            rc.levels = int(c.integer("dynamics", "refinement_levels"));
            rc.seed = seed;
            const auto r = periodic_refinement_test(rc);
            for (std::size_t k = 0; k < r.sup_differences.size(); ++k)
                ft.add({v.tag(), (long long)r.sizes[k], (long long)r.sizes[k + 1], r.sup_differences[k]});
            ok = ok && r.strictly_decreasing;
        }
        a.tables.push_back(std::move(ft));
        a.verdicts.push_back({"refinement", ok, ok ? "sup differences strictly decreasing" : "not decreasing",
                              nlohmann::json::object()});
    }
}

}  // namespace kpzlab::detail
