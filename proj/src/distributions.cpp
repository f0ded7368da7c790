#include "cwdsim/distributions.hpp"

#include <cmath>
#include <numbers>

namespace cwdsim {

double Weibull::sample(RandomStream& rng) const {
    const double u = rng.uniform();
    return location + scale * std::pow(-std::log(1.0 - u), 1.0 / shape);
}

double Weibull::mean() const { return location + scale * std::tgamma(1.0 + 1.0 / shape); }

double Weibull::cdf(double x) const {
    if (x <= location) return 0.0;
    return 1.0 - std::exp(-std::pow((x - location) / scale, shape));
}

double Rayleigh::sample(RandomStream& rng) const {
    const double u = rng.uniform();
    return scale * std::sqrt(-2.0 * std::log(1.0 - u));
}

double Rayleigh::mean() const { return scale * std::sqrt(std::numbers::pi / 2.0); }

double Rayleigh::cdf(double x) const {
    if (x <= 0.0) return 0.0;
    return 1.0 - std::exp(-x * x / (2.0 * scale * scale));
}

double ExpNorm::sample(RandomStream& rng) const {
    const double z = rng.standard_normal();
    const double e = rng.exponential(1.0);
    return location + scale * (z + shape * e);
}

double ExpNorm::mean() const { return location + scale * shape; }

double ExpNorm::variance() const { return scale * scale * (1.0 + shape * shape); }

double ExpNorm::cdf(double x) const {
    const double z = (x - location) / scale;
    const double phi = 0.5 * std::erfc(-z / std::numbers::sqrt2);
    // Evaluate the exponential tail in log space; the naive product overflows
    // for small K.
    const double arg = z - 1.0 / shape;
    const double log_tail = -z / shape + 1.0 / (2.0 * shape * shape);
    const double phi_shift = 0.5 * std::erfc(-arg / std::numbers::sqrt2);
    if (phi_shift <= 0.0) return phi;
    return phi - std::exp(log_tail + std::log(phi_shift));
}

}  // namespace cwdsim
