#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tsal/errors.hpp"

namespace tsal {

// Deterministic counter-based random stream. A generator is a (key, counter)
// pair; drawing advances only the counter, and split() derives an independent
// child key without touching the parent's state. The same key/counter pair
// always yields the same value, which keeps dropout masks, initialization and
// sampling reproducible no matter how work is divided between streams.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x1905b7b5e1235a6dULL)) {}

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // Child stream independent of the parent's draw position.
    Rng split(std::uint64_t stream) const {
        return Rng(mix(key_ ^ mix(stream + 0x632be59bd9b4e019ULL)));
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    int uniform_int(int n) {
        if (n <= 0) throw DomainError("Rng::uniform_int: n must be positive");
        return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n));
    }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // Gamma(shape, scale) via Marsaglia-Tsang. Mean = shape * scale.
    double gamma(double shape, double scale) {
        if (shape <= 0.0 || scale <= 0.0)
            throw DomainError("Rng::gamma: shape and scale must be positive");
        if (shape < 1.0) {
            // Boost to shape+1 and correct with a power of a uniform.
            double u = 1.0 - uniform();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = 1.0 - uniform();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v * scale;
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = next_u64() % i;
            std::swap(items[i - 1], items[j]);
        }
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace tsal
