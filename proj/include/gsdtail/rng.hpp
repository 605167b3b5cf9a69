#pragma once

#include <cstdint>
#include <random>

namespace gsdtail {

namespace rng_detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace rng_detail

// Reproducible seeded stream: identical (seed, stream) gives an identical
// engine; distinct stream ids give independently seeded engines, so
// substream results can be merged deterministically in stream-id order.
struct RngStream {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    std::mt19937_64 make_engine() const {
        std::uint64_t s = seed;
        std::uint64_t mixed = rng_detail::splitmix64(s);
        std::uint64_t t = stream ^ 0xda3e39cb94b95bdbULL;
        mixed ^= rng_detail::splitmix64(t);
        std::seed_seq seq{
            static_cast<std::uint32_t>(mixed), static_cast<std::uint32_t>(mixed >> 32),
            static_cast<std::uint32_t>(rng_detail::splitmix64(s)),
            static_cast<std::uint32_t>(rng_detail::splitmix64(t)),
            static_cast<std::uint32_t>(rng_detail::splitmix64(s) >> 32),
            static_cast<std::uint32_t>(rng_detail::splitmix64(t) >> 32)};
        return std::mt19937_64(seq);
    }

    RngStream substream(std::uint64_t offset) const { return RngStream{seed, stream + offset}; }
};

// Gamma(shape, scale 1) via Marsaglia-Tsang, with the power-of-uniform
// boost for shape < 1.
inline double sample_gamma(std::mt19937_64& eng, double shape) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (shape < 1.0) {
        const double g = sample_gamma(eng, shape + 1.0);
        double u = unif(eng);
        while (u == 0.0) u = unif(eng);
        return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x, v;
        do {
            x = normal(eng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = unif(eng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

}  // namespace gsdtail
