#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace qtraj {

// Philox4x32-10 counter-based generator.
// Salmon et al., "Parallel random numbers: as easy as 1, 2, 3", SC 2011.
struct Philox4x32 {
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kW0;
            key[1] += kW1;
        }
        return ctr;
    }
};

// Purpose tag keeps dynamics noise and projective-readout draws on disjoint
// counter ranges of the same (master_seed, stream_id) pair.
enum class StreamPurpose : std::uint32_t { dynamics = 0, readout = 1 };

// One independent N(0,1)/uniform stream per (master_seed, stream_id, purpose).
// Stateless apart from a block counter, so streams never depend on scheduling.
class RandomStream {
  public:
    RandomStream(std::uint64_t master_seed, std::uint32_t stream_id, StreamPurpose purpose)
        : key_{static_cast<std::uint32_t>(master_seed),
               static_cast<std::uint32_t>(master_seed >> 32)},
          stream_id_(stream_id),
          purpose_(static_cast<std::uint32_t>(purpose)) {}

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller; draws come in pairs.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), never log(0)
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t next_u64() {
        if (word_ == 0) {
            const std::array<std::uint32_t, 4> ctr{
                static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                stream_id_, purpose_};
            buf_ = Philox4x32::block(ctr, key_);
            ++block_;
        }
        const int base = word_;
        word_ = (word_ + 2) & 3;
        return (static_cast<std::uint64_t>(buf_[base + 1]) << 32) | buf_[base];
    }

    std::array<std::uint32_t, 2> key_;
    std::uint32_t stream_id_;
    std::uint32_t purpose_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int word_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace qtraj
