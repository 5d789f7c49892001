#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace kpzlab {

// Sectioned key/value text:
//
//   [run]
//   experiment = scaling
//   seed = 7
//   [model]
//   potentials = quadratic(a=1); perturbed(a=1,b=0.3,sine)
//   [scaling]
//   T = 0.1
//
// Numeric lists are comma separated, tag lists (potentials, test functions, check names) are
// separated by ';'. Every experiment has a fixed key set with defaults; unknown keys are rejected.
struct ExperimentConfig {
    std::map<std::string, std::map<std::string, std::string>> sections;

    const std::string& experiment() const;
    bool has(const std::string& section, const std::string& key) const;
    const std::string& str(const std::string& section, const std::string& key) const;
    double num(const std::string& section, const std::string& key) const;
    long long integer(const std::string& section, const std::string& key) const;
    std::uint64_t uint(const std::string& section, const std::string& key) const;
    bool flag(const std::string& section, const std::string& key) const;
    std::vector<double> nums(const std::string& section, const std::string& key) const;
    std::vector<long long> integers(const std::string& section, const std::string& key) const;
    std::vector<std::string> tags(const std::string& section, const std::string& key) const;

    void set(const std::string& section, const std::string& key, const std::string& value);

    bool operator==(const ExperimentConfig&) const = default;
};

const std::vector<std::string>& experiment_tags();

// raw parse, no defaults
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize(const ExperimentConfig& c);

// fills defaults for the experiment, rejects unknown keys and malformed values
ExperimentConfig resolve(ExperimentConfig c);

}  // namespace kpzlab
