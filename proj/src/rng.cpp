#include "ndd/rng.hpp"

#include <cmath>

#include "ndd/errors.hpp"
#include "ndd/special_functions.hpp"

namespace ndd {

std::uint64_t Rng::next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::uniform() {
    for (;;) {
        const double u = (next_u64() >> 11) * 0x1.0p-53;
        if (u > 0.0) return u;
    }
}

double Rng::normal() { return norm_quantile(uniform()); }

double Rng::gamma(double shape) {
    if (!(shape > 0.0))
        throw NumericError("Rng::gamma: shape must be positive");
    if (shape < 1.0)
        return gamma(shape + 1.0) * std::pow(uniform(), 1.0 / shape);
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

void Rng::dirichlet(const std::vector<double>& alpha, double* out) {
    const std::size_t d = alpha.size();
    for (;;) {
        double sum = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            out[j] = gamma(alpha[j]);
            sum += out[j];
        }
        bool interior = sum > 0.0;
        for (std::size_t j = 0; interior && j < d; ++j)
            if (out[j] <= 0.0 || out[j] == sum) interior = false;
        if (!interior) continue; // astronomically rare underflow; redraw
        for (std::size_t j = 0; j < d; ++j) out[j] /= sum;
        return;
    }
}

} // namespace ndd
