#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace mamba {

// Deterministic random source. mt19937_64 has a standardized bit stream; the
// distributions below are pinned here instead of using the
// implementation-defined <random> distribution templates, so identical seeds
// give identical values on every platform and compiler.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t bits() { return gen_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(bits() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Inclusive range, unbiased via rejection.
    int uniform_int(int lo, int hi) {
        const uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % range;
        uint64_t r;
        do {
            r = bits();
        } while (r >= limit);
        return lo + static_cast<int>(r % range);
    }

    // Box-Muller (cosine branch only, keeps the stream layout simple).
    double normal() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Fisher-Yates.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(bits() % i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

// Stable sub-seed derivation (splitmix64 mix of seed and stream tag), used to
// give independent deterministic streams to parallel workers.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace mamba
