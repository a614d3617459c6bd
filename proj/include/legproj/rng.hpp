#pragma once

// Counter-based uniform stream. Philox4x32-10 (Salmon et al., SC'11) keyed
// by the 64-bit seed; the 128-bit counter carries (sample index, stream id).
// Any sample index is reachable in O(1), so a batch can be cut into
// partitions and generated in any order with identical results.

#include <array>
#include <cstdint>

namespace legproj {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept
{
    constexpr std::uint32_t m0 = 0xD2511F53u;
    constexpr std::uint32_t m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u;
    constexpr std::uint32_t w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{m0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{m1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += w0;
        key[1] += w1;
    }
    return ctr;
}

/// 52 random bits -> (k + 1/2) 2^-52, strictly inside (0, 1).
inline double to_open_unit(std::uint64_t bits) noexcept
{
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// SplitMix64 finalizer; used to derive seeds, not to generate samples.
inline std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Deterministic uniform stream on (0, 1) identified by (seed, stream_id).
class RngStream
{
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept
        : seed_(seed), stream_(stream_id)
    {
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }
    /// Index of the next uniform returned by next().
    std::uint64_t position() const noexcept { return position_; }

    /// The index-th uniform of this stream; independent of position().
    double at(std::uint64_t index) const noexcept
    {
        const auto block = generate(index >> 1);
        return to_open_unit((index & 1u) == 0 ? pack(block[0], block[1]) : pack(block[2], block[3]));
    }

    double next() noexcept
    {
        const std::uint64_t index = position_++;
        if ((index & 1u) == 0 || !cached_valid_ || cached_block_ != (index >> 1)) {
            cached_block_ = index >> 1;
            cached_ = generate(cached_block_);
            cached_valid_ = true;
        }
        return to_open_unit((index & 1u) == 0 ? pack(cached_[0], cached_[1])
                                               : pack(cached_[2], cached_[3]));
    }

    /// Skip ahead (or back) to an absolute index.
    void seek(std::uint64_t index) noexcept { position_ = index; }

  private:
    static std::uint64_t pack(std::uint32_t hi, std::uint32_t lo) noexcept
    {
        return (std::uint64_t{hi} << 32) | lo;
    }

    PhiloxCounter generate(std::uint64_t block) const noexcept
    {
        const PhiloxCounter ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                                static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        const PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
        return philox4x32_10(ctr, key);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t position_ = 0;
    std::uint64_t cached_block_ = 0;
    PhiloxCounter cached_{};
    bool cached_valid_ = false;
};

}  // namespace legproj
