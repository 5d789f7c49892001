// Runs every shipped acceptance config and prints one PASS/FAIL line per criterion.
//   acceptance [--configs DIR] [--out DIR] [A01 A07 ...]
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "kpzlab/harness/run.hpp"

using namespace kpzlab;

namespace {

struct Criterion {
    std::string id, title, config;
    std::vector<std::string> verdicts;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> c{
        {"A01", "thermo identities", "a01_a02_thermo.ini", {"thermo_identities"}},
        {"A02", "Legendre round trip", "a01_a02_thermo.ini", {"legendre_round_trip"}},
        {"A03", "conservation and noise structure", "a03_dynamics.ini", {"conservation", "noise_covariance"}},
        {"A04", "stationarity for all alpha", "a04_stationarity.ini", {"stationarity"}},
        {"A05", "local limit rate", "a05_a06_ensembles.ini", {"llt_rate"}},
        {"A06", "equivalence of ensembles", "a05_a06_ensembles.ini", {"equivalence"}},
        {"A07", "fixed-time white noise", "a07_a08_scaling.ini", {"white_noise_variance", "white_noise_normality"}},
        {"A08", "martingale quadratic variation", "a07_a08_scaling.ini", {"martingale_qv"}},
        {"A09", "BG residual decay", "a09_a10_a12_bg.ini", {"bg_residuals"}},
        {"A10", "S/A/M split and A regularity", "a09_a10_a12_bg.ini", {"decomposition", "rv_qv_slope"}},
        {"A11", "SBE linear exactness", "a11_sbe.ini", {"sbe_spectrum"}},
        {"A12", "energy residual trend", "a09_a10_a12_bg.ini", {"energy_residual", "nl_identity"}},
        {"A13", "micro vs SBE two-point", "a13_compare.ini", {"micro_vs_sbe"}},
    };
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string config_dir = KPZLAB_CONFIG_DIR, out_dir = "acceptance_out";
    std::vector<std::string> only;
    app.add_option("--configs", config_dir, "directory with the shipped configs");
    app.add_option("--out", out_dir, "artifact root");
    app.add_option("criteria", only, "subset such as A01 A07");
    CLI11_PARSE(app, argc, argv);
    const std::set<std::string> wanted(only.begin(), only.end());

    std::map<std::string, RunArtifact> done;
    std::map<std::string, std::string> errors;
    int failed = 0;
    for (const auto& cr : criteria()) {
        if (!wanted.empty() && !wanted.count(cr.id)) continue;
        if (!done.count(cr.config) && !errors.count(cr.config)) {
            try {
                auto cfg = load_config((std::filesystem::path(config_dir) / cr.config).string());
                const auto stem = std::filesystem::path(cr.config).stem().string();
                cfg.set("run", "out", (std::filesystem::path(out_dir) / stem).string());
                auto a = run(cfg);
                write_artifact(a, a.config.str("run", "out"));
                std::fprintf(stderr, "[%s] %.1f s\n", cr.config.c_str(), a.wall_seconds);
                done.emplace(cr.config, std::move(a));
            } catch (const std::exception& e) {
                errors[cr.config] = e.what();
            }
        }
        bool pass = true;
        std::string detail;
        if (errors.count(cr.config)) {
            pass = false;
            detail = "error: " + errors[cr.config];
        } else {
            const auto& a = done.at(cr.config);
            if (a.failure) {
                pass = false;
                detail = "run failed (" + a.failure->kind + "): " + a.failure->message + "; ";
            }
            for (const auto& name : cr.verdicts) {
                try {
                    const auto& v = a.verdict(name);
                    pass = pass && v.pass;
                    detail += name + (v.pass ? " ok" : " FAILED") + ": " + v.detail + " | ";
                } catch (const std::exception&) {
                    pass = false;
                    detail += name + ": missing | ";
                }
            }
        }
        if (!pass) ++failed;
        std::printf("%s %s %s -- %s\n", cr.id.c_str(), pass ? "PASS" : "FAIL", cr.title.c_str(), detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
