#ifndef COTRAIN_RNG_HPP
#define COTRAIN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace cotrain {

// splitmix64 step; the mixing primitive behind seed derivation and Rng seeding.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives a child seed from a base seed and a key path. Every random decision
// in the project draws from a seed derived this way (per fold, per setting,
// per round), so partial reruns reproduce the corresponding slice of a full run.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = base;
    for (std::uint64_t k : keys) {
        s ^= splitmix64(k) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        std::uint64_t tmp = s;
        s = splitmix64(tmp);
    }
    return s;
}

// xoshiro256** with hand-rolled distributions. std:: distributions are
// implementation-defined, so results would not be stable across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) {
        // rejection sampling to avoid modulo bias
        const std::uint64_t threshold = -bound % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

    bool bernoulli(double p) { return next_double() < p; }

    // Knuth's product-of-uniforms method; fine for the means used here (< 700).
    std::uint64_t poisson(double mean) {
        const double limit = std::exp(-mean);
        double product = 1.0;
        std::uint64_t count = 0;
        for (;;) {
            product *= next_double();
            if (product <= limit) return count;
            ++count;
        }
    }

    // Index sampled from unnormalized non-negative weights.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double u = next_double() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            u -= weights[i];
            if (u < 0.0) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

    // Fisher-Yates; deterministic unlike std::shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            using std::swap;
            swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4];
};

} // namespace cotrain

#endif
