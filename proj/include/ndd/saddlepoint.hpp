#pragma once

#include <cstddef>
#include <vector>

#include "ndd/ndd_model.hpp"

namespace ndd {

// Product of m independent Beta(a_i, b_i) variables; the working object is
// Z = log X = sum of log Y_i, whose CGF is a sum of log-beta CGFs.
struct BetaProductSpec {
    std::vector<double> a;
    std::vector<double> b;

    std::size_t m() const { return a.size(); }
    // Left edge of the CGF domain: t must stay above -min(a_i).
    double t_min() const;
};

// Marginal spec of terminal column j: along P_j the branch proportions are
// independent, B ~ Beta(alpha_child, phi_node - alpha_child).
BetaProductSpec beta_product_spec(const NddModel& model, int col);

struct SaddlepointSolution {
    double t_hat; // root of K'(t) = z, strictly inside (t_min, inf)
    double K;     // K(t_hat)
    double K1;    // K'(t_hat), equals z up to solver tolerance
    double K2;    // K''(t_hat) > 0
    double K3;    // K'''(t_hat)
};

// K_Z and its derivatives. order 0 is the CGF itself; order m >= 1 is the
// m-th derivative (a polygamma sum of order m - 1). Requires t > t_min().
double cgf(const BetaProductSpec& spec, double t, int order);

// Root of K'(t) = z for z < 0, by safeguarded Newton with a maintained
// bracket; K' is strictly increasing so the root is unique.
SaddlepointSolution solve_saddlepoint(const BetaProductSpec& spec, double z);

// Integral of the unnormalized saddlepoint density over (0,1). Compute once
// per spec when evaluating grids.
double pdf_normalizer(const BetaProductSpec& spec);

// Saddlepoint density of X at x, back-transformed from the log scale. With
// normalize set, the density is divided by pdf_normalizer(spec).
double marginal_pdf(const BetaProductSpec& spec, double x, bool normalize = false);

// Lugannani-Rice CDF of X at x, with the separate expression at the mean of
// Z and linear interpolation through a narrow window around it. Clamped to
// [1e-15, 1 - 1e-15] and monotone in x.
double marginal_cdf(const BetaProductSpec& spec, double x);

} // namespace ndd
