#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace remest {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream seeds for one experiment (env/channel, agent init,
// exploration, evaluation) derived from a single master seed.
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    return splitmix64(splitmix64(master) + stream);
}

// All stochastic draws in the project go through this wrapper so that runs
// are reproducible independent of the standard library's distribution
// implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}

    uint64_t next_u64() { return gen_(); }

    // uniform on [0, 1), 53-bit resolution
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller (no cached spare, fixed draw count)
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    // uniform integer in [0, bound), rejection sampled (no modulo bias)
    int uniform_int(int bound) {
        if (bound <= 0) throw std::invalid_argument("uniform_int: bound must be positive");
        const auto n = static_cast<uint64_t>(bound);
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            const uint64_t r = gen_();
            if (r >= threshold) return static_cast<int>(r % n);
        }
    }

    // index drawn from an (unnormalized tolerated) probability vector
    int categorical(std::span<const double> probs) {
        const double u = uniform();
        double acc = 0.0;
        for (size_t i = 0; i < probs.size(); ++i) {
            acc += probs[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;  // rounding slack
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 gen_;
};

}  // namespace remest
