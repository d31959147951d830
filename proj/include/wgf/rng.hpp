#pragma once
// Counter-based random number generation (Philox4x32-10). Streams are
// addressed by (seed, stream id), so replications can draw from disjoint
// substreams and results do not depend on thread count or scheduling.

#include <array>
#include <cstdint>
#include <string_view>

namespace wgf {

// One Philox4x32-10 block: 128-bit counter, 64-bit key, 128-bit output.
std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                   const std::array<uint32_t, 2>& key);

// 64-bit FNV-1a hash, used to derive stream ids from purpose tags.
uint64_t fnv1a64(std::string_view bytes);

// Mixes a purpose tag with an index into a stream id. Distinct tags or
// indices give statistically independent streams under the same seed.
uint64_t substream(std::string_view tag, uint64_t index = 0);

class RngStream {
public:
    RngStream(uint64_t seed, uint64_t stream);

    uint32_t next_u32();
    uint64_t next_u64();

    // Uniform on (0,1), 53-bit resolution, never returns 0 or 1.
    double uniform();

    // Standard normal via Box-Muller; generated in pairs, one is cached.
    double normal();

    uint64_t seed() const { return seed_; }
    uint64_t stream() const { return stream_; }

private:
    void refill();

    uint64_t seed_;
    uint64_t stream_;
    uint64_t block_ = 0;
    std::array<uint32_t, 4> buf_{};
    int pos_ = 4;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

} // namespace wgf
