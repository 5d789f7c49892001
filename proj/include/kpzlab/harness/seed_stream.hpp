#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace kpzlab {

// Philox4x64-10 block function.
using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;
PhiloxCounter philox4x64_10(PhiloxCounter ctr, PhiloxKey key);

// Module tags keep streams of different consumers apart even for equal replica indices.
enum class StreamTag : std::uint32_t {
    generic = 0,
    stationary_init = 1,
    dynamics_noise = 2,
    sampler = 3,
    sbe_init = 4,
    sbe_noise = 5,
    test = 6,
};

std::uint64_t stream_id(std::uint64_t index, StreamTag tag);

// Counter-based stream: key = master seed, counter = (block position, stream id, 0, 0).
// Every draw is a pure function of (master, id, position).
class SeedStream {
public:
    SeedStream(std::uint64_t master, std::uint64_t index, StreamTag tag = StreamTag::generic);

    std::uint64_t master() const { return master_; }
    std::uint64_t id() const { return id_; }
    std::uint64_t position() const { return pos_; }

    std::uint64_t next_u64() {
        if (left_ == 0) refill();
        return block_[std::size_t(4 - left_--)];
    }
    // uniform on (0,1), 53 bits
    double uniform() { return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53; }
    // ziggurat
    double normal();
    void fill_normal(std::span<double> out);
    void fill_uniform(std::span<double> out);

private:
    void refill();

    std::uint64_t master_;
    std::uint64_t id_;
    std::uint64_t pos_ = 0;
    std::array<std::uint64_t, 4> block_{};
    int left_ = 0;
};

SeedStream seed_stream(std::uint64_t master, std::uint64_t index, StreamTag tag);

}  // namespace kpzlab
