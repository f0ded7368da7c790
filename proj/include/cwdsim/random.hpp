#pragma once

#include <cstdint>
#include <random>

namespace cwdsim {

// Deterministic per-purpose random stream. The engine, the driver sampler and
// the GA each draw from their own stream so adding draws to one never shifts
// another. Variates are produced by explicit transforms of 53-bit uniforms
// rather than <random> distributions, whose algorithms vary between standard
// libraries.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    double uniform();  // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double standard_normal();
    double exponential(double mean);  // inverse CDF

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stream identifiers; stable so outputs stay reproducible across versions.
namespace stream {
inline constexpr std::uint64_t kArrivals = 1;
inline constexpr std::uint64_t kFleet = 2;
inline constexpr std::uint64_t kDrivers = 3;
inline constexpr std::uint64_t kInitialSoc = 4;
inline constexpr std::uint64_t kEntrySpeed = 5;
inline constexpr std::uint64_t kGenetic = 16;
}  // namespace stream

}  // namespace cwdsim
