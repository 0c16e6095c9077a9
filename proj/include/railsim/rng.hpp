#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace railsim {

// splitmix64 finalizer; also used as the lattice/ray hash everywhere a
// stateless deterministic value is needed.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Spread `a` over all 64 bits before folding `b` in: combining small nearby
// integers directly collides badly when both arguments vary over small ranges.
inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

inline double u64_to_unit_double(std::uint64_t u) {
    // 53 mantissa bits -> [0, 1)
    return static_cast<double>(u >> 11) * 0x1.0p-53;
}

// Seeded stream RNG. std::mt19937_64 is bit-reproducible across platforms;
// the distribution conversions are hand-rolled because the std ones are not.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform() { return u64_to_unit_double(next_u64()); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Inclusive on both ends.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() {
        // Box-Muller, one value per call; the spare is cached.
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Counter-based Gaussian stream: value depends only on (seed, frame, index),
// so parallel evaluation order cannot change results.
class CounterNoise {
  public:
    CounterNoise(std::uint64_t seed, std::uint64_t frame) :
        base_(hash_combine(seed, frame)) {}

    double normal(std::uint64_t index) const {
        const std::uint64_t h1 = mix64(base_ ^ (index * 2 + 0));
        const std::uint64_t h2 = mix64(base_ ^ (index * 2 + 1));
        double u1 = u64_to_unit_double(h1);
        const double u2 = u64_to_unit_double(h2);
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

  private:
    std::uint64_t base_;
};

}  // namespace railsim
