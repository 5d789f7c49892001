#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "kpzlab/core/errors.hpp"
#include "kpzlab/harness/run.hpp"

using namespace kpzlab;

int main(int argc, char** argv) {
    CLI::App app{"lab: equilibrium fluctuation experiments for the weakly asymmetric gradient model"};
    std::string experiment, config_path, out, n_list;
    std::uint64_t seed = 0;
    long long replicas = 0;
    unsigned threads = 0;
    app.add_option("experiment", experiment, "thermo, ensembles, dynamics, scaling, bg, sbe or compare")->required();
    app.add_option("--config", config_path, "config file");
    auto* seed_opt = app.add_option("--seed", seed, "master seed");
    auto* rep_opt = app.add_option("--replicas", replicas, "replica count")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "output directory");
    app.add_option("--n", n_list, "comma separated scaling parameters");
    app.add_option("--threads", threads, "worker threads (also LAB_THREADS)");
    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig c = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        if (c.has("run", "experiment") && c.experiment() != experiment)
            throw ConfigError("config is for experiment " + c.experiment() + ", not " + experiment);
        c.set("run", "experiment", experiment);
        if (*seed_opt) c.set("run", "seed", std::to_string(seed));
        if (*rep_opt) c.set("run", "replicas", std::to_string(replicas));
        if (!n_list.empty()) c.set("run", "n", n_list);
        if (threads > 0) c.set("run", "threads", std::to_string(threads));
        if (!out.empty()) c.set("run", "out", out);

        const RunArtifact a = run(c);
        const std::string dir = a.config.str("run", "out");
        write_artifact(a, dir);
        for (const auto& v : a.verdicts)
            std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", v.name.c_str(), v.detail.c_str());
        if (a.failure) std::fprintf(stderr, "lab: run failed (%s): %s\n", a.failure->kind.c_str(), a.failure->message.c_str());
        std::printf("artifacts in %s (%.1f s)\n", dir.c_str(), a.wall_seconds);
        return exit_code(a);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "lab: %s\n", e.what());
        return 1;
    }
}
