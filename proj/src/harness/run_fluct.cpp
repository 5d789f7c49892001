#include <algorithm>
#include <cmath>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/fluctuation/fluctuation.hpp"
#include "runners.hpp"

namespace kpzlab::detail {

namespace {

bool is_quadratic(const Potential& v) { return v.family() == PotentialFamily::quadratic; }

std::vector<TestFunction> etas_of(const ExperimentConfig& c, const std::string& sec) {
    std::vector<TestFunction> out;
    for (const auto& t : c.tags(sec, "etas")) out.push_back(test_function_from_tag(t));
    if (out.empty()) throw ConfigError(sec + ".etas is empty");
    return out;
}

ScalingConfig scaling_config(const ExperimentConfig& c, const std::string& sec, const Potential& v, double n) {
    ScalingConfig s;
    s.potential = v;
    s.lambda0 = c.num("model", "lambda0");
    s.n = n;
    s.T = c.num(sec, "T");
    s.dt = c.num(sec, "dt");
    s.replicas = int(c.integer("run", "replicas"));
    s.seed = c.uint("run", "seed");
    s.etas = etas_of(c, sec);
    s.deltas = c.nums(sec, "deltas");
    s.records = int(c.integer(sec, "records"));
    s.n_sites = std::size_t(c.integer(sec, "n_sites"));
    s.trace_replicas = int(c.integer(sec, "trace_replicas"));
    return s;
}

void add_traces(Table& t, const ScalingRun& run, double n, bool with_bg) {
    const std::size_t k = std::min<std::size_t>(std::size_t(run.config.trace_replicas), run.replicas.size());
    for (std::size_t r = 0; r < k; ++r)
        for (std::size_t e = 0; e < run.config.etas.size(); ++e) {
            const auto& s = run.replicas[r].etas[e];
            for (std::size_t i = 0; i < run.times.size(); ++i) {
                std::vector<Cell> row{run.config.potential.tag(), n, (long long)r, run.config.etas[e].tag(),
                                      run.times[i], s.v[i], s.S[i], s.A[i], s.M[i], s.qv[i]};
                if (with_bg) {
                    row.push_back(s.bg1[i]);
                    row.push_back(s.nl.empty() ? 0.0 : s.nl[0][i]);
                }
                t.add(std::move(row));
            }
        }
}

}  // namespace

void run_scaling_experiment(const ExperimentConfig& c, RunArtifact& a) {
    const auto pots = config_potentials(c);
    const auto ns = c.nums("run", "n");
    const double n_max = ns.back();
    const double ratio_tol = c.num("scaling", "ratio_tol");
    const double z_max = c.num("scaling", "z_max");
    const auto min_rep = c.integer("scaling", "min_replicas");
    const double alpha = c.num("scaling", "normality_alpha");

    Table wn("white_noise", {"potential", "n", "eta", "time", "variance", "variance_se", "target", "finite_n_target",
                             "ratio", "ratio_se", "mean", "mean_se", "skewness", "excess_kurtosis", "jb_p"});
    Table pt("pairs", {"potential", "n", "eta", "zeta", "covariance", "se", "target", "z"});
    Table qt("martingale_qv", {"potential", "n", "eta", "accumulator", "path_mean", "path_se", "target",
                               "relative_error", "tolerance"});
    Table tr("traces", {"potential", "n", "replica", "eta", "t", "v", "S", "A", "M", "qv"});

    bool var_ok = true, norm_ok = true, qv_ok = true;
    std::string var_detail, norm_detail, qv_detail;
    const long long replicas = c.integer("run", "replicas");
    if (replicas < min_rep) {
        var_ok = false;
        var_detail = "replicas " + std::to_string(replicas) + " < " + std::to_string(min_rep) + "; ";
    }
    nlohmann::json est = nlohmann::json::object();

    for (const auto& v : pots) {
        std::vector<double> qv_err;
        for (double n : ns) {
            const auto run = run_scaling(scaling_config(c, "scaling", v, n));
            const auto& etas = run.config.etas;
            std::vector<std::vector<double>> samples(etas.size());
            for (std::size_t i = 0; i < etas.size(); ++i)
                for (const auto& r : run.replicas) samples[i].push_back(r.etas[i].v.back());
            std::vector<std::pair<std::size_t, std::size_t>> pairs;
            for (std::size_t i = 0; i < etas.size(); ++i)
                for (std::size_t j = i + 1; j < etas.size(); ++j) pairs.emplace_back(i, j);
            const double T = run.times.back();
            const auto ws = white_noise_stats(samples, etas, run.coeffs.sigma2, run.geometry, T, pairs);
            for (const auto& m : ws.marginals) {
                wn.add({v.tag(), n, m.eta, m.time, m.variance.value, m.variance.se, m.target, m.finite_n,
                        m.ratio.value, m.ratio.se, m.mean, m.mean_se, m.normality.skewness,
                        m.normality.excess_kurtosis, m.normality.p_value});
                if (n == n_max) {
                    const bool ok = std::abs(m.ratio.value - 1) <= ratio_tol + z_max * m.ratio.se;
                    var_ok = var_ok && ok;
                    var_detail += v.tag() + " " + m.eta + ": ratio " + fmt(m.ratio.value) + " +- " + fmt(m.ratio.se) + "; ";
                    if (is_quadratic(v)) {
                        norm_ok = norm_ok && m.normality.p_value > alpha;
                        norm_detail += m.eta + ": JB p " + fmt(m.normality.p_value) + "; ";
                    }
                }
                est[v.tag()]["n=" + fmt(n)][m.eta]["variance_ratio"] = {{"value", m.ratio.value}, {"se", m.ratio.se}};
            }
            for (const auto& p : ws.pairs)
                pt.add({v.tag(), n, p.eta, p.zeta, p.covariance.value, p.covariance.se, p.target, p.z});

            double worst = 0;
            for (std::size_t i = 0; i < etas.size(); ++i) {
                const auto q = martingale_qv_report(run, i);
                const double tol = n >= c.num("scaling", "qv_fine_n") ? c.num("scaling", "qv_tol")
                                                                      : c.num("scaling", "qv_tol_coarse");
                qt.add({v.tag(), n, etas[i].tag(), q.accumulator, q.path_mean, q.path_se, q.target, q.relative_error, tol});
                const bool ok = q.relative_error <= tol;
                qv_ok = qv_ok && ok;
                if (!ok) qv_detail += v.tag() + " n=" + fmt(n) + " " + etas[i].tag() + ": " + fmt(q.relative_error) + "; ";
                worst = std::max(worst, q.relative_error);
            }
            qv_err.push_back(worst);
            add_traces(tr, run, n, false);
        }
        const bool positive = std::all_of(qv_err.begin(), qv_err.end(), [](double x) { return x > 0; });
        SlopeFit f;
        if (positive) f = loglog_slope(ns, qv_err);
        else f.verdict = "insufficient";
        est[v.tag()]["qv_relative_error_slope"] = {{"verdict", f.verdict}, {"slope", f.slope}, {"ci_low", f.ci_low},
                                                   {"ci_high", f.ci_high}};
    }
    if (norm_detail.empty()) norm_detail = "no quadratic potential in the run";
    if (qv_detail.empty()) qv_detail = "all relative errors within tolerance";
    a.tables.push_back(std::move(wn));
    a.tables.push_back(std::move(pt));
    a.tables.push_back(std::move(qt));
    a.tables.push_back(std::move(tr));
    a.verdicts.push_back({"white_noise_variance", var_ok, var_detail, {{"ratio_tol", ratio_tol}, {"z_max", z_max}}});
    a.verdicts.push_back({"white_noise_normality", norm_ok, norm_detail, {{"alpha", alpha}}});
    a.verdicts.push_back({"martingale_qv", qv_ok, qv_detail, nlohmann::json::object()});
    a.estimates["scaling"] = est;
}

void run_bg(const ExperimentConfig& c, RunArtifact& a) {
    const auto pots = config_potentials(c);
    const auto ns = c.nums("run", "n");
    const double growth = c.num("bg", "ratio_growth_max");
    const auto multiples = c.integers("bg", "rv_multiples");

    Table bg("bg", {"potential", "n", "kind", "delta", "ell", "second_moment", "se", "bound", "ratio", "exact_zero"});
    Table en("energy", {"potential", "n", "delta", "t", "second_moment", "se"});
    Table nl("nonlinearity", {"potential", "n", "delta", "t", "mean", "se"});
    Table rv("rv_qv", {"potential", "n", "process", "delta_qv", "qv", "se"});
    Table id("identities", {"potential", "n", "max_split_error", "max_nl_identity_error"});
    Table tr("traces", {"potential", "n", "replica", "eta", "t", "v", "S", "A", "M", "qv", "bg1", "nl"});

    bool bg_ok = true, rv_ok = true, energy_ok = true;
    std::string bg_detail, rv_detail, energy_detail;
    double max_split = 0, max_nl = 0;
    nlohmann::json est = nlohmann::json::object();

    for (const auto& v : pots) {
        // [kind][n] for kind = bg1, bg2(delta 0), bg2(delta 1), ...
        std::vector<std::string> kinds;
        std::vector<std::vector<ResidualReport>> res;
        std::vector<Estimate> energy_T;
        for (double n : ns) {
            const auto run = run_scaling(scaling_config(c, "bg", v, n));
            const auto& deltas = run.config.deltas;
            if (res.empty()) {
                kinds.push_back("bg1");
                for (double d : deltas) kinds.push_back("bg2(delta=" + fmt(d) + ")");
                res.resize(kinds.size());
            }
            const auto r1 = bg1_residual(run, 0);
            bg.add({v.tag(), n, std::string("bg1"), 0.0, (long long)r1.ell, r1.second_moment.value, r1.second_moment.se,
                    r1.bound, r1.ratio, (long long)r1.exact_zero});
            res[0].push_back(r1);
            for (std::size_t d = 0; d < deltas.size(); ++d) {
                const auto r2 = bg2_residual(run, 0, d);
                bg.add({v.tag(), n, std::string("bg2"), deltas[d], (long long)r2.ell, r2.second_moment.value,
                        r2.second_moment.se, r2.bound, r2.ratio, (long long)r2.exact_zero});
                res[d + 1].push_back(r2);
                const auto e = energy_residual(run, 0, d);
                for (std::size_t i = 0; i < e.times.size(); ++i)
                    en.add({v.tag(), n, deltas[d], e.times[i], e.second_moment[i], e.second_moment_se[i]});
                if (d == 0) energy_T.push_back(e.at_T);
                const auto q = nonlinearity_estimate(run, 0, d);
                for (std::size_t i = 0; i < q.times.size(); ++i)
                    nl.add({v.tag(), n, deltas[d], q.times[i], q.mean[i], q.mean_se[i]});
            }
            const double grid = run.times[1] - run.times[0];
            std::vector<double> dq;
            for (long long m : multiples) dq.push_back(double(m) * grid);
            for (bool mart : {false, true}) {
                const auto r = russo_vallois_report(run, 0, mart, dq);
                for (std::size_t i = 0; i < r.deltas.size(); ++i)
                    rv.add({v.tag(), n, std::string(mart ? "M" : "A"), r.deltas[i], r.qv[i], r.qv_se[i]});
                if (!mart && n == ns.back()) {
                    est[v.tag()]["rv_slope_A"] = {{"verdict", r.fit.verdict}, {"slope", r.fit.slope},
                                                  {"ci_low", r.fit.ci_low}, {"ci_high", r.fit.ci_high}};
                    if (!is_quadratic(v)) {
                        const double lo = c.num("bg", "rv_slope_lo"), hi = c.num("bg", "rv_slope_hi");
                        const bool ok = r.fit.verdict == "ok" && r.fit.slope >= lo && r.fit.slope <= hi;
                        rv_ok = rv_ok && ok;
                        rv_detail += v.tag() + " n=" + fmt(n) + ": slope " + fmt(r.fit.slope) + " in [" + fmt(lo) +
                                     ", " + fmt(hi) + "]; ";
                    }
                }
            }
            const auto sp = split_report(run);
            id.add({v.tag(), n, sp.max_split_error, sp.max_nl_identity_error});
            max_split = std::max(max_split, sp.max_split_error);
            max_nl = std::max(max_nl, sp.max_nl_identity_error);
            add_traces(tr, run, n, true);
        }

        for (std::size_t k = 0; k < kinds.size(); ++k) {
            const auto& r = res[k];
            if (is_quadratic(v)) {
                const bool ok = std::all_of(r.begin(), r.end(), [](const ResidualReport& x) { return x.exact_zero; });
                bg_ok = bg_ok && ok;
                bg_detail += v.tag() + " " + kinds[k] + (ok ? ": exactly zero; " : ": NOT exactly zero; ");
                continue;
            }
            const bool down = ns.size() < 2 || r.back().second_moment.value < r.front().second_moment.value;
            double worst_growth = 0;
            bool bounded = r.front().ratio > 0;
            for (const auto& x : r) {
                if (r.front().ratio > 0) worst_growth = std::max(worst_growth, x.ratio / r.front().ratio);
                bounded = bounded && x.ratio <= growth * r.front().ratio;
            }
            bg_ok = bg_ok && down && bounded;
            bg_detail += v.tag() + " " + kinds[k] + ": E[X^2] " + fmt(r.front().second_moment.value) + " -> " +
                         fmt(r.back().second_moment.value) + ", ratio growth " + fmt(worst_growth) + "; ";
            std::vector<double> xs, ys, se;
            for (std::size_t i = 0; i < r.size(); ++i) {
                xs.push_back(ns[i]);
                ys.push_back(r[i].second_moment.value);
                se.push_back(r[i].second_moment.se);
            }
            SlopeFit f;
            if (std::all_of(ys.begin(), ys.end(), [](double y) { return y > 0; })) f = loglog_slope(xs, ys, se);
            else f.verdict = "insufficient";
            est[v.tag()][kinds[k] + "_slope"] = {{"verdict", f.verdict}, {"slope", f.slope}, {"ci_low", f.ci_low},
                                                 {"ci_high", f.ci_high}};
        }

        if (!is_quadratic(v)) {
            bool dec = true;
            for (std::size_t i = 1; i < energy_T.size(); ++i) dec = dec && energy_T[i].value < energy_T[i - 1].value;
            energy_ok = energy_ok && dec;
            energy_detail += v.tag() + ": E[R(T)^2] =";
            for (const auto& e : energy_T) energy_detail += " " + fmt(e.value);
            energy_detail += "; ";
        }
    }
    const double split_tol = c.num("bg", "split_tol"), nl_tol = c.num("bg", "nl_tol");
    a.tables.push_back(std::move(bg));
    a.tables.push_back(std::move(en));
    a.tables.push_back(std::move(nl));
    a.tables.push_back(std::move(rv));
    a.tables.push_back(std::move(id));
    a.tables.push_back(std::move(tr));
    if (rv_detail.empty()) rv_detail = "no perturbed potential in the run";
    if (energy_detail.empty()) energy_detail = "no perturbed potential in the run";
    a.verdicts.push_back({"bg_residuals", bg_ok, bg_detail, {{"ratio_growth_max", growth}}});
    a.verdicts.push_back({"decomposition", max_split <= split_tol,
                          "max split error " + fmt(max_split) + " (tol " + fmt(split_tol) + ")",
                          {{"max_split_error", max_split}, {"tol", split_tol}}});
    a.verdicts.push_back({"rv_qv_slope", rv_ok, rv_detail, nlohmann::json::object()});
    a.verdicts.push_back({"energy_residual", energy_ok, energy_detail, nlohmann::json::object()});
    a.verdicts.push_back({"nl_identity", max_nl <= nl_tol,
                          "max block vs mollified error " + fmt(max_nl) + " (tol " + fmt(nl_tol) + ")",
                          {{"max_nl_identity_error", max_nl}, {"tol", nl_tol}}});
    a.estimates["bg"] = est;
}

}  // namespace kpzlab::detail
