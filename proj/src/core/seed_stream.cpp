#include "kpzlab/harness/seed_stream.hpp"

#include <boost/random/normal_distribution.hpp>

namespace kpzlab {

namespace {

using u128 = unsigned __int128;
constexpr std::uint64_t kM0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kM1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kW0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kW1 = 0xBB67AE8584CAA73Bull;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

struct Engine {
    SeedStream* s;
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()() { return s->next_u64(); }
};

}  // namespace

PhiloxCounter philox4x64_10(PhiloxCounter c, PhiloxKey k) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kW0;
            k[1] += kW1;
        }
        const u128 p0 = u128(kM0) * c[0], p1 = u128(kM1) * c[2];
        c = {std::uint64_t(p1 >> 64) ^ c[1] ^ k[0], std::uint64_t(p1), std::uint64_t(p0 >> 64) ^ c[3] ^ k[1],
             std::uint64_t(p0)};
    }
    return c;
}

std::uint64_t stream_id(std::uint64_t index, StreamTag tag) {
    // bijective in index for a fixed tag
    return splitmix64(index ^ (std::uint64_t(tag) << 56));
}

SeedStream::SeedStream(std::uint64_t master, std::uint64_t index, StreamTag tag)
    : master_(master), id_(stream_id(index, tag)) {}

SeedStream seed_stream(std::uint64_t master, std::uint64_t index, StreamTag tag) {
    return SeedStream(master, index, tag);
}

void SeedStream::refill() {
    block_ = philox4x64_10({pos_, id_, 0, 0}, {master_, 0});
    ++pos_;
    left_ = 4;
}

double SeedStream::normal() {
    boost::random::normal_distribution<double> nd;
    Engine e{this};
    return nd(e);
}

void SeedStream::fill_normal(std::span<double> out) {
    boost::random::normal_distribution<double> nd;
    Engine e{this};
    for (double& v : out) v = nd(e);
}

void SeedStream::fill_uniform(std::span<double> out) {
    for (double& v : out) v = uniform();
}

}  // namespace kpzlab
