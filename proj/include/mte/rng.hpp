#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mte {

/// Philox4x32-10 counter-based generator.
///
/// The stream is a pure function of (key, counter): a replication keyed by
/// (seed, rep_index, stream) can be regenerated on any thread in any order.
/// Satisfies UniformRandomBitGenerator with 64-bit outputs.
class Philox4x32 {
public:
    using result_type = std::uint64_t;

    Philox4x32(std::uint64_t seed, std::uint32_t rep_index, std::uint32_t stream) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0u, 0u, rep_index, stream} {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (pos_ == 2) refill();
        const result_type out = (static_cast<result_type>(block_[2 * pos_]) << 32) | block_[2 * pos_ + 1];
        ++pos_;
        return out;
    }

    /// Uniform on the open interval (0, 1) with 53-bit resolution.
    double uniform() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    /// The keyed Philox bijection applied to one 128-bit counter block.
    static std::array<std::uint32_t, 4> bijection(std::array<std::uint32_t, 4> x,
                                                  std::array<std::uint32_t, 2> k) noexcept {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x[2];
            x = {static_cast<std::uint32_t>(p1 >> 32) ^ x[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ x[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        return x;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    void refill() noexcept {
        block_ = bijection(counter_, key_);
        pos_ = 0;
        // 64-bit counter in the low two words; the high words hold the
        // replication and stream ids.
        if (++counter_[0] == 0) ++counter_[1];
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 2;
};

}  // namespace mte
