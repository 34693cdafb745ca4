#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace coulomb {

// Philox 4x64 with 10 rounds, the counter-based generator also used by
// numpy.random.Philox (output words verified against it in the tests).
// Streams are keyed by (seed, streamId); the 256-bit counter advances one
// block per four outputs, so a stream's draws depend only on its key and
// draw index, never on scheduling.
class Philox {
  public:
    Philox(std::uint64_t seed, std::uint64_t stream_id) : key_{seed, stream_id} {}

    std::uint64_t next_u64() {
        if (pos_ == 4) {
            block_ = generate(ctr_, key_);
            increment();
            pos_ = 0;
        }
        return block_[pos_++];
    }

    // Uniform on (0,1]; never returns 0 so logs are safe.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1p-53;
    }

    // Uniform integer in [0, n). Single-draw multiply-shift map; the modulo
    // bias is O(n / 2^64) and irrelevant at particle counts.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller. Draws exactly two uniforms per pair.
    std::array<double, 2> normal_pair() {
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    static std::array<std::uint64_t, 4> generate(const std::array<std::uint64_t, 4>& counter,
                                                 const std::array<std::uint64_t, 2>& key);

  private:
    void increment() {
        for (int i = 0; i < 4; ++i) {
            if (++ctr_[i] != 0) break;
        }
    }

    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 4> ctr_{0, 0, 0, 0};
    std::array<std::uint64_t, 4> block_{};
    int pos_ = 4;
};

}  // namespace coulomb
