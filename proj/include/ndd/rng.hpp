#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ndd {

// Deterministic 64-bit generator (SplitMix64 core) with the variate
// transforms the library needs. The integer stream is identical on every
// platform; one instance is not safe for concurrent use, derive per-thread
// streams with split().
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    // Uniform on the open interval (0, 1).
    double uniform();

    // Standard normal via the inverse-CDF transform.
    double normal();

    // Gamma(shape, scale 1), shape > 0. Marsaglia-Tsang squeeze; the
    // shape < 1 case is boosted through Gamma(shape + 1).
    double gamma(double shape);

    // Dirichlet(alpha) as normalized independent gamma variates. Writes d
    // strictly positive entries summing to 1.
    void dirichlet(const std::vector<double>& alpha, double* out);

    // Independent child stream.
    Rng split() { return Rng(next_u64() ^ 0x9E3779B97F4A7C15ULL); }

private:
    std::uint64_t state_;
};

} // namespace ndd
