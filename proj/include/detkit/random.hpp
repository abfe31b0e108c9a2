#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace detkit {

// Deterministic random source. std::mt19937_64 output is bit-exact across
// platforms, but the standard distributions are not, so the samplers here
// are hand-rolled on top of the raw engine output.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform in [0,1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0,1); safe as a log() argument.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    int uniform_int(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform_index(
                        static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // Box-Muller; draws two uniforms per call, no cached spare.
    double normal(double mean = 0.0, double stddev = 1.0) {
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double z = std::sqrt(-2.0 * std::log(u1)) *
                         std::cos(2.0 * 3.141592653589793238462643 * u2);
        return mean + stddev * z;
    }

    // Knuth product method; fine for the small rates used here.
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        const double limit = std::exp(-lambda);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform_open();
        } while (p > limit);
        return k - 1;
    }

  private:
    std::mt19937_64 eng_;
};

// splitmix64 finalizer; used to derive independent per-item streams from a
// master seed so that serial and parallel runs agree.
inline std::uint64_t mix_seed(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix_seed(master + 0x9e3779b97f4a7c15ULL * (index + 1));
}

}  // namespace detkit
