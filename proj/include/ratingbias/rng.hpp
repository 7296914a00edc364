#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ratingbias {

/// SplitMix64 finalizer. Used to derive independent stream seeds from
/// (seed, index) pairs so that per-run streams do not depend on scheduling.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Stable derivation: derive_seed(s, k) = splitmix64(splitmix64(s) ^ (k + 1)).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ (index + 1));
}

/// Seeded generator passed explicitly to every stochastic routine.
class Rng {
public:
    using result_type = std::mt19937_64::result_type;

    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }

    /// Independent child stream; does not advance this generator.
    Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

    result_type operator()() { return engine_(); }
    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }

    double normal(double mean = 0.0, double sd = 1.0) {
        std::normal_distribution<double> dist(mean, sd);
        return dist(engine_);
    }

    double uniform(double lo = 0.0, double hi = 1.0) {
        std::uniform_real_distribution<double> dist(lo, hi);
        return dist(engine_);
    }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        std::uniform_int_distribution<std::size_t> dist(0, n - 1);
        return dist(engine_);
    }

    bool coin() { return index(2) == 1; }

    template <class T>
    void shuffle(std::vector<T>& v) {
        // Fisher-Yates with our own index draws so the permutation only depends on the engine.
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace ratingbias
