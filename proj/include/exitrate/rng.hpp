#pragma once

#include <cmath>
#include <cstdint>

namespace exitrate {

/// Counter-based pseudo-random source: output depends only on (seed, counter),
/// so draws can be generated in any order or in parallel with identical
/// results. Mixing is the splitmix64 finalizer over seed + counter strides.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform draw in (0, 1].
    double uniform(std::uint64_t counter) const {
        const std::uint64_t z = mix(seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL);
        return (static_cast<double>(z >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard Gaussian draw (Box-Muller, cosine branch). Consumes the
    /// uniform counters 2*counter and 2*counter + 1.
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t seed_;
};

} // namespace exitrate
