#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace turbmit {

/// Deterministic random generator. Uniform and normal variates are produced
/// by explicit formulas on top of std::mt19937_64 so that streams are
/// bit-reproducible across platforms and standard libraries (the std
/// distributions are implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; caches the second variate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    int uniform_int(int n) {  // in [0, n)
        return static_cast<int>(next_u64() % static_cast<uint64_t>(n));
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// splitmix64 finalizer; used to derive independent substream seeds.
inline uint64_t mix_seed(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Substream seed for (master, stream index). Streams derived with distinct
/// indices are independent for all practical purposes, which makes per-frame
/// and per-block work order-invariant under parallel scheduling.
inline uint64_t substream_seed(uint64_t master, uint64_t stream) {
    return mix_seed(master ^ mix_seed(stream + 0x517cc1b727220a95ULL));
}

}  // namespace turbmit
