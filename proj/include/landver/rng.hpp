#pragma once

#include <cstdint>
#include <random>

namespace landver {

// Deterministic uniform source. Avoids std distribution objects so that a
// given seed yields identical streams across standard library versions.
struct Rng {
    std::mt19937_64 gen;

    explicit Rng(std::uint64_t seed) : gen(seed) {}

    double unit() { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    std::uint64_t next_u64() { return gen(); }
    int uniform_int(int lo, int hi) { // inclusive
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }
    // Standard normal via Box-Muller; used by weight initialization.
    double normal() {
        double u1 = unit();
        while (u1 <= 0.0) u1 = unit();
        const double u2 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
};

// Stable derived stream: one master seed, independent substreams per purpose.
inline Rng derived_rng(std::uint64_t master_seed, std::uint64_t stream_id) {
    std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return Rng(z ^ (z >> 31));
}

} // namespace landver
