#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace aec {

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for sub-stream `index` of `seed` (per-tree, per-fold, ...).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632BE59BD9B4E019ULL));
}

/// Deterministic generator. std::mt19937_64 output is fixed by the standard, but the
/// std distributions and std::shuffle are not, so draws are implemented here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = engine_();
        while (v >= limit) {
            v = engine_();
        }
        return v % n;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace aec
