#pragma once
// Deterministic RNG. All randomness is derived from a single experiment
// seed through named sub-streams ("dataset", "init", "shuffle", "lambda",
// ...), so ablations that share a seed see the same data. Distributions
// are implemented here rather than with std::*_distribution, whose output
// is implementation-defined.

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>

namespace cpsw::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// xoshiro256++
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // [0, 1)
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // [0, bound), unbiased
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("rng: zero bound");
        const std::uint64_t limit = bound * (UINT64_MAX / bound);
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % bound;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    double normal(double mean = 0.0, double stddev = 1.0) {
        // Box-Muller; the sine branch is discarded to keep call sites
        // stateless.
        double u1;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586 * u2);
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::array<std::uint64_t, 4> s_{};
};

// Named sub-stream of a root seed.
inline Rng derive(std::uint64_t seed, std::string_view stream) {
    std::uint64_t mix = seed ^ fnv1a(stream);
    return Rng(splitmix64(mix));
}

// Per-item sub-stream (sample index, trial index, ...). Parallel item
// processing stays reproducible because each item owns its stream.
inline Rng derive(std::uint64_t seed, std::string_view stream,
                  std::uint64_t index) {
    std::uint64_t mix = seed ^ fnv1a(stream);
    mix = splitmix64(mix) ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    return Rng(splitmix64(mix));
}

} // namespace cpsw::rng
