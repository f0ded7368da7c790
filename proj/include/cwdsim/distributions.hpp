#pragma once

#include "cwdsim/random.hpp"

namespace cwdsim {

// Three-parameter Weibull: x = location + scale * W, W ~ Weibull(shape, 1).
struct Weibull {
    double shape = 1.0;
    double scale = 1.0;
    double location = 0.0;

    double sample(RandomStream& rng) const;
    double mean() const;
    double cdf(double x) const;
};

struct Rayleigh {
    double scale = 1.0;

    double sample(RandomStream& rng) const;
    double mean() const;
    double cdf(double x) const;
};

// Exponentially modified normal in the (K, loc, scale) parameterization:
// x = loc + scale * (Z + K * E), Z ~ N(0,1), E ~ Exp(1).
struct ExpNorm {
    double shape = 1.0;  // K
    double location = 0.0;
    double scale = 1.0;

    double sample(RandomStream& rng) const;
    double mean() const;
    double variance() const;
    double cdf(double x) const;
};

}  // namespace cwdsim
