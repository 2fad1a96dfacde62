#pragma once

#include <cstdint>
#include <random>

namespace funcscan {

// splitmix64 finaliser; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Roles that get their own substream inside one replicate.
enum class StreamRole : std::uint64_t {
    Covariate = 1,
    Error = 2,
    Measurement = 3,
    Genotype = 4,
    Treatment = 5,
    MonteCarlo = 6,
};

/// Substream keyed by (seed, replicate, role). The engine state depends only
/// on the key, so a replicate draws the same numbers whichever worker runs it.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t replicate = 0, StreamRole role = StreamRole::MonteCarlo)
        : engine_(mix64(mix64(mix64(seed) ^ replicate) ^ static_cast<std::uint64_t>(role))) {}

    double normal() { return normal_(engine_); }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    int binomial(int trials, double p) { return std::binomial_distribution<int>(trials, p)(engine_); }
    double chi_squared(double df) { return std::chi_squared_distribution<double>(df)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

}  // namespace funcscan
