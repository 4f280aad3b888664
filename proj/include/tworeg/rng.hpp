#pragma once

#include <cmath>
#include <cstdint>

namespace tworeg {

/// Splittable counter-based generator (splitmix64 core). Substreams are
/// derived from (seed, key) pairs, so replicate k always sees the same
/// stream no matter which worker runs it or in which order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform index in [0, bound). Rejection sampling keeps it exact.
    std::uint64_t next_index(std::uint64_t bound) {
        const std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    /// Standard normal via Box-Muller; second variate is cached.
    double next_gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925286766559 * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Independent substream keyed by `key`, derived from the construction
    /// seed only (consuming values from the parent does not affect it).
    Rng fork(std::uint64_t key) const { return Rng(derive(seed_, key)); }

    /// Deterministic seed for substream `key` of `seed`.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t key) {
        return mix(seed ^ mix(key + 0x9E3779B97F4A7C15ULL));
    }

    /// Two-level derivation, e.g. (fold, replicate) or (salt, index).
    static std::uint64_t derive2(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
        return derive(derive(seed, a), b);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace tworeg
