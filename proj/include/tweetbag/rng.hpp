#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace tweetbag {

/// Seeded pseudo-random source used for every stochastic step (splits,
/// initialization, dropout, epoch shuffling).
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard distributions are implementation-defined, so the
/// derived draws below are written out explicitly to keep results identical
/// across toolchains:
///   uniform()   = (next() >> 11) * 2^-53, a double in [0, 1)
///   below(n)    = rejection sampling on the top of the 64-bit range
///   shuffle(v)  = Fisher-Yates from the back, j = below(i + 1)
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return uniform() < p; }

    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

// SplitMix64 finalizer over (seed, stream): derives independent child seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace tweetbag
