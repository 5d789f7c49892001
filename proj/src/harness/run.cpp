#include "kpzlab/harness/run.hpp"

#include <chrono>
#include <cstdio>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/core/parallel.hpp"
#include "kpzlab/dynamics/dynamics.hpp"
#include "runners.hpp"

namespace kpzlab {

namespace detail {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

std::vector<Potential> config_potentials(const ExperimentConfig& c) {
    std::vector<Potential> out;
    const auto probe = default_probe_grid();
    for (const auto& tag : c.tags("model", "potentials")) {
        Potential v = [&] {
            try {
                return potential_from_tag(tag);
            } catch (const UsageError& e) {
                throw ConfigError(e.what());
            }
        }();
        const auto rep = validate_assumption_v(v, probe);
        if (!rep.pass) throw ConfigError("potential " + tag + " rejected: " + rep.message);
        out.push_back(std::move(v));
    }
    if (out.empty()) throw ConfigError("model.potentials is empty");
    return out;
}

}  // namespace detail

RunArtifact run(const ExperimentConfig& raw) {
    RunArtifact a;
    a.config = resolve(raw);
    const auto& c = a.config;
    detail::config_potentials(c);
    if (auto w = c.integer("run", "threads"); w > 0) set_worker_threads(unsigned(w));

    const auto t0 = std::chrono::steady_clock::now();
    const std::string& e = c.experiment();
    try {
        if (e == "thermo") detail::run_thermo(c, a);
        else if (e == "ensembles") detail::run_ensembles(c, a);
        else if (e == "dynamics") detail::run_dynamics(c, a);
        else if (e == "scaling") detail::run_scaling_experiment(c, a);
        else if (e == "bg") detail::run_bg(c, a);
        else if (e == "sbe") detail::run_sbe(c, a);
        else if (e == "compare") detail::run_compare(c, a);
        else throw ConfigError("unknown experiment " + e);
    } catch (const BlowUpError& err) {
        a.failure = Failure{"blow_up", err.what()};
    } catch (const NumericError& err) {
        a.failure = Failure{"numeric", err.what()};
    }
    a.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return a;
}

int exit_code(const RunArtifact& a) {
    if (a.failure) return 1;
    return a.all_pass() ? 0 : 2;
}

}  // namespace kpzlab
