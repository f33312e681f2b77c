#pragma once

// Counter-based random streams.
//
// Philox4x32-10 keyed by a 64-bit seed; the 128-bit counter is split into a
// 64-bit stream id and a 64-bit block index. Every replication of every
// experiment draws from its own (seed, stream id) pair, so results do not
// depend on scheduling order.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace coxsn {

class Philox4x32 {
  public:
    using result_type = std::uint64_t;
    using counter_type = std::array<std::uint32_t, 4>;
    using key_type = std::array<std::uint32_t, 2>;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    Philox4x32() : Philox4x32(0, 0) {}
    Philox4x32(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream_id) {}

    result_type operator()() {
        if (pos_ == 2) {
            refill();
        }
        auto lo = static_cast<std::uint64_t>(buf_[2 * pos_]);
        auto hi = static_cast<std::uint64_t>(buf_[2 * pos_ + 1]);
        ++pos_;
        return (hi << 32) | lo;
    }

    void discard(unsigned long long n) {
        for (; n > 0; --n) {
            (*this)();
        }
    }

    std::uint64_t stream_id() const { return stream_; }

    /// Raw block function, exposed for known-answer tests.
    static counter_type block(counter_type ctr, key_type key) {
        constexpr std::uint32_t m0 = 0xD2511F53u;
        constexpr std::uint32_t m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u;
        constexpr std::uint32_t w1 = 0xBB67AE85u;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += w0;
                key[1] += w1;
            }
            std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
            std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
            auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            auto lo0 = static_cast<std::uint32_t>(p0);
            auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

    friend bool operator==(const Philox4x32& a, const Philox4x32& b) {
        return a.key_ == b.key_ && a.stream_ == b.stream_ && a.block_ == b.block_ &&
               a.pos_ == b.pos_;
    }

  private:
    void refill() {
        counter_type ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                         static_cast<std::uint32_t>(stream_),
                         static_cast<std::uint32_t>(stream_ >> 32)};
        buf_ = block(ctr, key_);
        ++block_;
        pos_ = 0;
    }

    key_type key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    counter_type buf_{};
    int pos_ = 2;
};

using Rng = Philox4x32;

/// Stream id for replication `index` of experiment component `tag`.
constexpr std::uint64_t stream_id(std::uint32_t tag, std::uint64_t index) {
    return (static_cast<std::uint64_t>(tag) << 40) ^ index;
}

inline Rng make_stream(std::uint64_t seed, std::uint32_t tag, std::uint64_t index) {
    return Rng(seed, stream_id(tag, index));
}

/// Uniform on the open interval (0,1) with 53-bit resolution.
template <class Engine>
double uniform_open(Engine& rng) {
    std::uint64_t bits = static_cast<std::uint64_t>(rng()) >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

template <class Engine>
double exponential(Engine& rng, double rate) {
    return -std::log(uniform_open(rng)) / rate;
}

}  // namespace coxsn
