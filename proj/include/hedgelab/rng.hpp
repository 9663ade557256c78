#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hedgelab {

// Deterministic RNG wrapper. std::mt19937_64 is bit-portable but the standard
// distributions are not, so uniform/normal draws are generated here directly.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(mix(seed)), seed_base_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n), n > 0
    std::int64_t uniform_int(std::int64_t n) {
        // modulo rejection to avoid bias
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        std::uint64_t x;
        do {
            x = gen_();
        } while (x >= limit);
        return static_cast<std::int64_t>(x % un);
    }

    // standard normal via Box-Muller (pairs cached)
    double normal() {
        if (has_cache_) {
            has_cache_ = false;
            return cache_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cache_ = r * std::sin(a);
        has_cache_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Independent deterministic substream (e.g. one per bootstrap replication).
    Rng fork(std::uint64_t stream) const {
        return Rng(seed_base_ ^ mix(stream + 0x9e3779b97f4a7c15ULL));
    }

    static std::uint64_t mix(std::uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

  private:
    std::mt19937_64 gen_;
    std::uint64_t seed_base_ = 0;
    double cache_ = 0.0;
    bool has_cache_ = false;
};

}  // namespace hedgelab
