#include "kpzlab/harness/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "kpzlab/core/errors.hpp"

namespace kpzlab {

namespace {

enum class Kind { num, pos, nonneg, integer, posint, nonnegint, uint, nums, posnums, ints, str, tags, boolean };

struct Key {
    const char* section;
    const char* name;
    Kind kind;
    const char* def;  // nullptr: required
};

const std::string kBoth = "quadratic(a=1); perturbed(a=1,b=0.3,sine)";
const std::string kPert = "perturbed(a=1,b=0.3,sine)";

std::vector<Key> schema(const std::string& exp) {
    std::vector<Key> k{
        {"run", "experiment", Kind::str, nullptr},
        {"run", "seed", Kind::uint, "1"},
        {"run", "threads", Kind::nonnegint, "0"},
        {"model", "lambda0", Kind::num, "0"},
    };
    auto add = [&](std::initializer_list<Key> more) { k.insert(k.end(), more); };
    if (exp == "thermo") {
        add({{"run", "out", Kind::str, "out/thermo"},
             {"model", "potentials", Kind::tags, kBoth.c_str()},
             {"thermo", "lambdas", Kind::nums, "-1, 0, 0.5, 2"},
             {"thermo", "identity_tol", Kind::pos, "1e-8"},
             {"thermo", "legendre_tol", Kind::pos, "1e-9"},
             {"thermo", "dphi_tol", Kind::pos, "1e-5"},
             {"thermo", "fd_step", Kind::pos, "1e-3"}});
    } else if (exp == "ensembles") {
        add({{"run", "out", Kind::str, "out/ensembles"},
             {"model", "potentials", Kind::tags, kBoth.c_str()},
             {"ensembles", "llt_n", Kind::posnums, "4, 8, 16, 32, 64"},
             {"ensembles", "llt_slope_lo", Kind::num, "-1.9"},
             {"ensembles", "llt_slope_hi", Kind::num, "-1.2"},
             {"ensembles", "llt_quadratic_tol", Kind::pos, "1e-5"},
             {"ensembles", "eq_n", Kind::posnums, "8, 16, 32, 64"},
             {"ensembles", "eq_quadratic_tol", Kind::pos, "1e-7"},
             {"ensembles", "eq_slope_max", Kind::num, "-1.4"}});
    } else if (exp == "dynamics") {
        add({{"run", "out", Kind::str, "out/dynamics"},
             {"run", "replicas", Kind::posint, "200"},
             {"model", "potentials", Kind::tags, kBoth.c_str()},
             {"dynamics", "checks", Kind::tags, "conservation; noise"},
             {"dynamics", "alphas", Kind::nums, "0, 0.2"},
             {"dynamics", "n_sites", Kind::posint, "1024"},
             {"dynamics", "steps", Kind::posint, "1000000"},
             {"dynamics", "dt", Kind::pos, "1e-3"},
             {"dynamics", "T", Kind::pos, "10"},
             {"dynamics", "conservation_tol", Kind::pos, "1e-10"},
             {"dynamics", "z_max", Kind::pos, "3"},
             {"dynamics", "refinement_sizes", Kind::posint, "128"},
             {"dynamics", "refinement_levels", Kind::posint, "3"}});
    } else if (exp == "scaling") {
        add({{"run", "out", Kind::str, "out/scaling"},
             {"run", "replicas", Kind::posint, "1000"},
             {"run", "n", Kind::posnums, "16, 64"},
             {"model", "potentials", Kind::tags, kBoth.c_str()},
             {"scaling", "T", Kind::pos, "0.1"},
             {"scaling", "dt", Kind::pos, "0.02"},
             {"scaling", "etas", Kind::tags, "gaussian(c=0,w=0.25); gaussian(c=1,w=0.25)"},
             {"scaling", "deltas", Kind::posnums, "0.5"},
             {"scaling", "records", Kind::posint, "64"},
             {"scaling", "n_sites", Kind::nonnegint, "0"},
             {"scaling", "trace_replicas", Kind::nonnegint, "4"},
             {"scaling", "ratio_tol", Kind::pos, "0.05"},
             {"scaling", "z_max", Kind::pos, "3"},
             {"scaling", "min_replicas", Kind::posint, "1000"},
             {"scaling", "normality_alpha", Kind::pos, "0.01"},
             {"scaling", "qv_tol", Kind::pos, "0.05"},
             {"scaling", "qv_tol_coarse", Kind::pos, "0.15"},
             {"scaling", "qv_fine_n", Kind::pos, "64"}});
    } else if (exp == "bg") {
        add({{"run", "out", Kind::str, "out/bg"},
             {"run", "replicas", Kind::posint, "200"},
             {"run", "n", Kind::posnums, "16, 32, 64"},
             {"model", "potentials", Kind::tags, kBoth.c_str()},
             {"bg", "T", Kind::pos, "0.1"},
             {"bg", "dt", Kind::pos, "0.02"},
             {"bg", "etas", Kind::tags, "gaussian(c=0,w=0.25)"},
             {"bg", "deltas", Kind::posnums, "0.5"},
             {"bg", "records", Kind::posint, "64"},
             {"bg", "n_sites", Kind::nonnegint, "0"},
             {"bg", "trace_replicas", Kind::nonnegint, "4"},
             {"bg", "rv_multiples", Kind::ints, "1, 2, 4, 8"},
             {"bg", "split_tol", Kind::pos, "1e-9"},
             {"bg", "nl_tol", Kind::pos, "1e-9"},
             {"bg", "rv_slope_lo", Kind::num, "0.3"},
             {"bg", "rv_slope_hi", Kind::num, "0.7"},
             {"bg", "ratio_growth_max", Kind::pos, "2"}});
    } else if (exp == "sbe") {
        add({{"run", "out", Kind::str, "out/sbe"},
             {"run", "replicas", Kind::posint, "64"},
             {"model", "potentials", Kind::tags, kPert.c_str()},
             {"sbe", "coefficients", Kind::str, "explicit"},
             {"sbe", "nu", Kind::pos, "0.5"},
             {"sbe", "b", Kind::num, "0"},
             {"sbe", "L", Kind::pos, "1"},
             {"sbe", "K", Kind::posint, "128"},
             {"sbe", "delta", Kind::pos, "0.05"},
             {"sbe", "dt", Kind::pos, "1e-3"},
             {"sbe", "burn_in", Kind::nonnegint, "0"},
             {"sbe", "samples", Kind::posint, "200"},
             {"sbe", "sample_every", Kind::posint, "50"},
             {"sbe", "z_max", Kind::pos, "3"}});
    } else if (exp == "compare") {
        add({{"run", "out", Kind::str, "out/compare"},
             {"run", "replicas", Kind::posint, "400"},
             {"run", "n", Kind::posnums, "64"},
             {"model", "potentials", Kind::tags, kPert.c_str()},
             {"compare", "T", Kind::pos, "0.1"},
             {"compare", "dt", Kind::pos, "0.02"},
             {"compare", "records", Kind::posint, "64"},
             {"compare", "n_sites", Kind::posint, "1024"},
             {"compare", "width", Kind::pos, "0.25"},
             {"compare", "bases", Kind::posint, "8"},
             {"compare", "offsets", Kind::nums, "0, 0.25, 0.5, 1"},
             {"compare", "lags", Kind::ints, "0, 8, 16, 32"},
             {"compare", "sbe_K", Kind::posint, "128"},
             {"compare", "sbe_delta", Kind::pos, "0.125"},
             {"compare", "sbe_record_every", Kind::posint, "10"},
             {"compare", "sbe_replicas", Kind::posint, "2000"},
             {"compare", "overlap_min", Kind::pos, "0.8"}});
    } else {
        throw ConfigError("config: unknown experiment '" + exp + "'");
    }
    return k;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

double to_num(const std::string& s, const std::string& where) {
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw ConfigError("config: " + where + ": '" + s + "' is not a number");
    return v;
}

long long to_int(const std::string& s, const std::string& where) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw ConfigError("config: " + where + ": '" + s + "' is not an integer");
    return v;
}

void check(const Key& k, const std::string& v) {
    const std::string where = std::string(k.section) + "." + k.name;
    switch (k.kind) {
        case Kind::num: to_num(v, where); break;
        case Kind::pos:
            if (!(to_num(v, where) > 0)) throw ConfigError("config: " + where + " must be positive");
            break;
        case Kind::nonneg:
            if (!(to_num(v, where) >= 0)) throw ConfigError("config: " + where + " must be non-negative");
            break;
        case Kind::integer: to_int(v, where); break;
        case Kind::posint:
            if (to_int(v, where) < 1) throw ConfigError("config: " + where + " must be a positive integer");
            break;
        case Kind::nonnegint:
            if (to_int(v, where) < 0) throw ConfigError("config: " + where + " must be a non-negative integer");
            break;
        case Kind::uint: {
            std::uint64_t u = 0;
            const auto r = std::from_chars(v.data(), v.data() + v.size(), u);
            if (r.ec != std::errc() || r.ptr != v.data() + v.size())
                throw ConfigError("config: " + where + ": '" + v + "' is not an unsigned integer");
            break;
        }
        case Kind::nums:
        case Kind::posnums: {
            const auto parts = split(v, ',');
            if (parts.empty()) throw ConfigError("config: " + where + " is empty");
            double prev = -INFINITY;
            for (const auto& p : parts) {
                const double x = to_num(p, where);
                if (k.kind == Kind::posnums) {
                    if (!(x > 0)) throw ConfigError("config: " + where + " entries must be positive");
                    if (!(x > prev)) throw ConfigError("config: " + where + " must be sorted ascending");
                }
                prev = x;
            }
            break;
        }
        case Kind::ints: {
            const auto parts = split(v, ',');
            if (parts.empty()) throw ConfigError("config: " + where + " is empty");
            for (const auto& p : parts) to_int(p, where);
            break;
        }
        case Kind::str:
            if (v.empty()) throw ConfigError("config: " + where + " is empty");
            break;
        case Kind::tags:
            if (split(v, ';').empty()) throw ConfigError("config: " + where + " is empty");
            break;
        case Kind::boolean:
            if (v != "true" && v != "false") throw ConfigError("config: " + where + " must be true or false");
            break;
    }
}

}  // namespace

const std::vector<std::string>& experiment_tags() {
    static const std::vector<std::string> t{"thermo", "ensembles", "dynamics", "scaling", "bg", "sbe", "compare"};
    return t;
}

const std::string& ExperimentConfig::experiment() const { return str("run", "experiment"); }

bool ExperimentConfig::has(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    return s != sections.end() && s->second.count(key);
}

const std::string& ExperimentConfig::str(const std::string& section, const std::string& key) const {
    const auto s = sections.find(section);
    if (s == sections.end() || !s->second.count(key)) throw ConfigError("config: missing " + section + "." + key);
    return s->second.at(key);
}

double ExperimentConfig::num(const std::string& section, const std::string& key) const {
    return to_num(str(section, key), section + "." + key);
}

long long ExperimentConfig::integer(const std::string& section, const std::string& key) const {
    return to_int(str(section, key), section + "." + key);
}

std::uint64_t ExperimentConfig::uint(const std::string& section, const std::string& key) const {
    const auto& v = str(section, key);
    std::uint64_t u = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), u);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError("config: " + section + "." + key + " is not an unsigned integer");
    return u;
}

bool ExperimentConfig::flag(const std::string& section, const std::string& key) const {
    const auto& v = str(section, key);
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("config: " + section + "." + key + " must be true or false");
}

std::vector<double> ExperimentConfig::nums(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const auto& p : split(str(section, key), ',')) out.push_back(to_num(p, section + "." + key));
    return out;
}

std::vector<long long> ExperimentConfig::integers(const std::string& section, const std::string& key) const {
    std::vector<long long> out;
    for (const auto& p : split(str(section, key), ',')) out.push_back(to_int(p, section + "." + key));
    return out;
}

std::vector<std::string> ExperimentConfig::tags(const std::string& section, const std::string& key) const {
    return split(str(section, key), ';');
}

void ExperimentConfig::set(const std::string& section, const std::string& key, const std::string& value) {
    sections[section][key] = trim(value);
}

ExperimentConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
        for (const auto& [key, value] : body) {
            if (!value.empty()) throw ConfigError("config: nested key under " + section + "." + key);
            c.set(section, key, value.data());
        }
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::string serialize(const ExperimentConfig& c) {
    std::string out;
    for (const auto& [section, keys] : c.sections) {
        if (!out.empty()) out += "\n";
        out += "[" + section + "]\n";
        for (const auto& [k, v] : keys) out += k + " = " + v + "\n";
    }
    return out;
}

ExperimentConfig resolve(ExperimentConfig c) {
    if (!c.has("run", "experiment")) throw ConfigError("config: run.experiment is required");
    const auto keys = schema(c.experiment());
    for (const auto& [section, body] : c.sections)
        for (const auto& [k, v] : body) {
            const bool known = std::any_of(keys.begin(), keys.end(),
                                           [&](const Key& s) { return section == s.section && k == s.name; });
            if (!known) throw ConfigError("config: unknown key " + section + "." + k + " for experiment " + c.experiment());
        }
    for (const auto& k : keys) {
        if (!c.has(k.section, k.name)) {
            if (!k.def) throw ConfigError(std::string("config: ") + k.section + "." + k.name + " is required");
            c.set(k.section, k.name, k.def);
        }
        check(k, c.str(k.section, k.name));
    }
    if (c.experiment() == "sbe") {
        const auto& mode = c.str("sbe", "coefficients");
        if (mode != "explicit" && mode != "matched") throw ConfigError("config: sbe.coefficients must be explicit or matched");
    }
    return c;
}

}  // namespace kpzlab
