#pragma once

#include <cstdint>
#include <random>

namespace spanqa {

// Deterministic random source. All floating draws are derived from the raw
// mt19937_64 stream by hand so results do not depend on the standard
// library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

// Fisher-Yates over indices [0, n), deterministic for a given seed.
template <typename Vec>
void seeded_shuffle(Vec& v, std::uint64_t seed) {
    Rng rng(seed);
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace spanqa
