#include <algorithm>
#include <cmath>

#include "kpzlab/ensembles/ensembles.hpp"
#include "kpzlab/thermo/thermo.hpp"
#include "runners.hpp"

namespace kpzlab::detail {

namespace {
bool is_quadratic(const Potential& v) { return v.family() == PotentialFamily::quadratic; }
}  // namespace

void run_thermo(const ExperimentConfig& c, RunArtifact& a) {
    const auto pots = config_potentials(c);
    const auto lambdas = c.nums("thermo", "lambdas");
    const double h = c.num("thermo", "fd_step");
    Table t("thermo", {"potential", "lambda", "rho", "rho_prime", "sigma2", "m3", "m4", "mean_vprime", "var_vprime",
                       "mean_vsecond", "identity_mean_err", "identity_var_err", "legendre_err", "dphi_fd",
                       "dphi_exact", "dphi_err"});
    double max_id = 0, max_leg = 0, max_dphi = 0;
    for (const auto& v : pots) {
        for (double lam : lambdas) {
            const auto p = moments(v, lam, 4);
            const double e1 = std::abs(p.mean_vprime - lam);
            const double e2 = std::abs(p.var_vprime - p.mean_vsecond);
            const double leg = std::abs(tilt_for_mean(v, p.rho_prime) - lam);
            // phi(rho) = E_{h'(rho)}[V'] = h'(rho); derivative against 1/sigma2
            const double step = h * std::sqrt(p.sigma2);
            const double up = tilt_for_mean(v, p.rho_prime + step);
            const double dn = tilt_for_mean(v, p.rho_prime - step);
            const double fd = (moments(v, up, 2).mean_vprime - moments(v, dn, 2).mean_vprime) / (2 * step);
            const double ex = 1.0 / p.sigma2;
            const double ed = std::abs(fd - ex);
            max_id = std::max({max_id, e1, e2});
            max_leg = std::max(max_leg, leg);
            max_dphi = std::max(max_dphi, ed);
            t.add({v.tag(), lam, p.rho, p.rho_prime, p.sigma2, p.m3(), p.m4(), p.mean_vprime, p.var_vprime,
                   p.mean_vsecond, e1, e2, leg, fd, ex, ed});
        }
    }
    a.tables.push_back(std::move(t));
    const double id_tol = c.num("thermo", "identity_tol");
    const double leg_tol = c.num("thermo", "legendre_tol");
    const double dphi_tol = c.num("thermo", "dphi_tol");
    a.verdicts.push_back({"thermo_identities", max_id <= id_tol,
                          "max |E[V']-lambda|, |var V' - E[V'']| = " + fmt(max_id) + " (tol " + fmt(id_tol) + ")",
                          {{"max_error", max_id}, {"tol", id_tol}}});
    a.verdicts.push_back({"legendre_round_trip", max_leg <= leg_tol && max_dphi <= dphi_tol,
                          "max |h'(rho'(l)) - l| = " + fmt(max_leg) + ", max |dphi fd - 1/sigma2| = " + fmt(max_dphi),
                          {{"max_legendre_error", max_leg},
                           {"legendre_tol", leg_tol},
                           {"max_dphi_error", max_dphi},
                           {"dphi_tol", dphi_tol}}});
    a.estimates["thermo"] = {{"max_identity_error", max_id}, {"max_legendre_error", max_leg}, {"max_dphi_error", max_dphi}};
}

void run_ensembles(const ExperimentConfig& c, RunArtifact& a) {
    const auto pots = config_potentials(c);
    const double lam = c.num("model", "lambda0");
    const auto llt_n = c.nums("ensembles", "llt_n");
    const auto eq_n = c.nums("ensembles", "eq_n");

    Table llt("llt", {"potential", "N", "gap"});
    Table eq("equivalence", {"potential", "observable", "N", "psi", "pointwise", "l2"});
    bool llt_ok = true, eq_ok = true;
    std::string llt_detail, eq_detail;
    nlohmann::json est = nlohmann::json::object();

    for (const auto& v : pots) {
        std::vector<double> gaps;
        for (double N : llt_n) {
            gaps.push_back(llt_gap(v, lam, int(N)));
            llt.add({v.tag(), (long long)N, gaps.back()});
        }
        if (is_quadratic(v)) {
            const double worst = *std::max_element(gaps.begin(), gaps.end());
            const double tol = c.num("ensembles", "llt_quadratic_tol");
            llt_ok = llt_ok && worst <= tol;
            llt_detail += v.tag() + ": max gap " + fmt(worst) + " (tol " + fmt(tol) + "); ";
            est[v.tag()]["llt_max_gap"] = worst;
        } else {
            const auto f = loglog_slope(llt_n, gaps);
            const double lo = c.num("ensembles", "llt_slope_lo"), hi = c.num("ensembles", "llt_slope_hi");
            const bool ok = f.verdict == "ok" && f.slope >= lo && f.slope <= hi;
            llt_ok = llt_ok && ok;
            llt_detail += v.tag() + ": slope " + fmt(f.slope) + " in [" + fmt(lo) + ", " + fmt(hi) + "]; ";
            est[v.tag()]["llt_slope"] = {{"slope", f.slope}, {"ci_low", f.ci_low}, {"ci_high", f.ci_high}, {"verdict", f.verdict}};
        }

        struct Obs {
            std::string name;
            LocalObservable F;
        };
        std::vector<Obs> obs;
        if (is_quadratic(v)) obs = {{"u0", observable_u0()}, {"u0^2", observable_u0_squared()}};
        else obs = {{"V'(u0)", observable_vprime(v)}};
        for (const auto& o : obs) {
            std::vector<double> pw;
            for (double N : eq_n) {
                const auto r = equivalence_residual(o.F, 1, int(N), v, lam);
                pw.push_back(std::abs(r.pointwise));
                eq.add({v.tag(), o.name, (long long)N, r.psi, r.pointwise, r.l2});
            }
            if (is_quadratic(v)) {
                const double worst = *std::max_element(pw.begin(), pw.end());
                const double tol = c.num("ensembles", "eq_quadratic_tol");
                eq_ok = eq_ok && worst <= tol;
                eq_detail += v.tag() + " " + o.name + ": max " + fmt(worst) + " (tol " + fmt(tol) + "); ";
                est[v.tag()]["equivalence_max_" + o.name] = worst;
            } else {
                const bool positive = std::all_of(pw.begin(), pw.end(), [](double x) { return x > 0; });
                SlopeFit f;
                if (positive) f = loglog_slope(eq_n, pw);
                else f.verdict = "insufficient";
                const double smax = c.num("ensembles", "eq_slope_max");
                const bool ok = f.verdict == "ok" && f.slope <= smax;
                eq_ok = eq_ok && ok;
                eq_detail += v.tag() + " " + o.name + ": slope " + fmt(f.slope) + " (max " + fmt(smax) + "); ";
                est[v.tag()]["equivalence_slope_" + o.name] = {
                    {"slope", f.slope}, {"ci_low", f.ci_low}, {"ci_high", f.ci_high}, {"verdict", f.verdict}};
            }
        }
    }
    a.tables.push_back(std::move(llt));
    a.tables.push_back(std::move(eq));
    a.verdicts.push_back({"llt_rate", llt_ok, llt_detail, nlohmann::json::object()});
    a.verdicts.push_back({"equivalence", eq_ok, eq_detail, nlohmann::json::object()});
    a.estimates["ensembles"] = est;
}

}  // namespace kpzlab::detail
