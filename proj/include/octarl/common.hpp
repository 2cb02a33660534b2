#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace octarl {

// Domain error. The CLI maps these to exit code 1; usage problems exit 2.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

// Deterministic RNG used everywhere randomness is needed. A splitmix64 core
// with hand-rolled uniform/normal variates, so the value stream is identical
// across platforms and standard-library versions.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() { return state_(); }

    // Uniform in [0,1), 53 random bits.
    double uniform() { return static_cast<double>(state_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) by rejection sampling.
    uint64_t uniform_index(uint64_t n) {
        if (n == 0) fail("uniform_index: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = state_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; the cosine twin is discarded to keep the
    // state stream a pure function of call count.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    struct SplitMix {
        uint64_t s;
        explicit SplitMix(uint64_t seed) : s(seed) {}
        uint64_t operator()() {
            s += 0x9e3779b97f4a7c15ULL;
            uint64_t z = s;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            return z ^ (z >> 31);
        }
    };
    SplitMix state_;
};

}  // namespace octarl
