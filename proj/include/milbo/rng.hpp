#pragma once

#include <cstdint>
#include <random>

namespace milbo {

// Checkpoints record this name together with the seed so a run can be
// reproduced by any build of the same version.
inline constexpr const char* kRngAlgorithm = "mt19937_64/splitmix64-mix";

// splitmix64 finalizer, used to decorrelate (seed, stream) pairs before
// feeding them to the engine.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// One engine per (seed, stream). The trainer uses the epoch index as the
// stream id, which makes every epoch's draws independent of how many
// epochs ran before it and lets checkpoint resume replay exactly.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(mix64(mix64(seed) ^ mix64(stream ^ 0xa076'1d64'78bd'642fULL))) {}

    bool bernoulli(double p_true) {
        return std::bernoulli_distribution(p_true)(engine_);
    }

    double uniform() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    // Uniform in [lo, hi)
    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }

    std::uint64_t next_u64() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace milbo
