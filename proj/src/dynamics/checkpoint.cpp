#include <cstdint>
#include <cstring>
#include <fstream>
#include <regex>

#include "kpzlab/core/errors.hpp"
#include "kpzlab/dynamics/dynamics.hpp"

namespace kpzlab {

namespace {
constexpr char kMagic[8] = {'K', 'P', 'Z', 'L', 'C', 'H', 'K', '1'};

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw ConfigError("checkpoint: truncated file");
    return v;
}
}  // namespace

// layout (little endian): magic[8], u64 n_sites, f64 dt, f64 alpha, f64 lambda0, f64 time,
// i64 steps, u32 tag_len, tag bytes, n_sites x f64
void write_checkpoint(const std::string& path, const LatticeState& s, double dt) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigError("checkpoint: cannot open " + tmp);
        os.write(kMagic, 8);
        put<std::uint64_t>(os, s.size());
        put(os, dt);
        put(os, s.alpha);
        put(os, s.lambda0);
        put(os, s.time);
        put<std::int64_t>(os, s.steps);
        const std::string& tag = s.potential.tag();
        put<std::uint32_t>(os, std::uint32_t(tag.size()));
        os.write(tag.data(), std::streamsize(tag.size()));
        os.write(reinterpret_cast<const char*>(s.u.data()), std::streamsize(s.u.size() * sizeof(double)));
        if (!os) throw ConfigError("checkpoint: write failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError("checkpoint: rename failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kMagic, 8) != 0) throw ConfigError("checkpoint: bad magic in " + path);
    Checkpoint c;
    const auto n = get<std::uint64_t>(is);
    c.dt = get<double>(is);
    c.state.alpha = get<double>(is);
    c.state.lambda0 = get<double>(is);
    c.state.time = get<double>(is);
    c.state.steps = get<std::int64_t>(is);
    const auto len = get<std::uint32_t>(is);
    std::string tag(len, '\0');
    is.read(tag.data(), len);
    c.state.potential = potential_from_tag(tag);
    c.state.u.resize(n);
    is.read(reinterpret_cast<char*>(c.state.u.data()), std::streamsize(n * sizeof(double)));
    if (!is) throw ConfigError("checkpoint: truncated site data");
    return c;
}

Potential potential_from_tag(const std::string& tag) {
    std::smatch m;
    static const std::regex quad(R"(quadratic\(a=([^)]+)\))");
    static const std::regex pert(R"(perturbed\(a=([^,]+),b=([^,]+),(sine|tanh)\))");
    if (std::regex_match(tag, m, quad)) return Potential::quadratic(std::stod(m[1]));
    if (std::regex_match(tag, m, pert))
        return Potential::perturbed(std::stod(m[1]), std::stod(m[2]),
                                    m[3] == "sine" ? PerturbationShape::sine : PerturbationShape::tanh);
    throw ConfigError("potential: cannot parse tag '" + tag + "'");
}

}  // namespace kpzlab
