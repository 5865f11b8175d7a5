#pragma once

#include <cstddef>
#include <vector>

#include "ndd/errors.hpp"
#include "ndd/matrix.hpp"
#include "ndd/rng.hpp"

namespace ndd {

struct DirichletParams {
    std::vector<double> alpha; // all entries > 0, length >= 2

    // Precision: the parameter total, always recomputed.
    double phi() const {
        double s = 0.0;
        for (double a : alpha) s += a;
        return s;
    }
    std::size_t dim() const { return alpha.size(); }
};

// Per-column data reductions. mean_log drives the likelihood; the optional
// moment fields (filled by compute_stats) give the MLE its starting point.
struct SufficientStats {
    std::size_t n = 0;
    std::vector<double> mean_log;  // (1/n) sum_i log x_ij, always < 0
    std::vector<double> mean;      // sample means; empty if unavailable
    double mean_sq_first = -1.0;   // (1/n) sum_i x_i1^2; < 0 if unavailable
    int degenerate_column = -1;    // column constant at machine level, else -1

    bool has_moments() const { return !mean.empty() && mean_sq_first >= 0.0; }
};

// Reduce a strictly-interior composition matrix (rows sum to 1 within 1e-8).
SufficientStats compute_stats(const Matrix& x);

// Log density at one strictly-interior simplex point of matching dimension.
double dd_log_density(const DirichletParams& params, const double* x, std::size_t d);

// Full log-likelihood n[lgamma(phi) - sum lgamma(a_j) + sum (a_j - 1) mean_log_j].
double dd_loglik(const DirichletParams& params, const SufficientStats& stats);

// As dd_loglik but without the alpha-free term -n sum_j mean_log_j. This is
// the per-node summand that makes nested likelihoods add up correctly.
double dd_adjusted_loglik(const DirichletParams& params, const SufficientStats& stats);

// Gradient of dd_loglik in alpha: n (digamma(phi) - digamma(a_j) + mean_log_j).
std::vector<double> dd_loglik_gradient(const DirichletParams& params,
                                       const SufficientStats& stats);

struct SolverOptions {
    double grad_tol = 1e-9; // max-norm of the gradient at the solution
    int max_iter = 500;
};

struct FitReport {
    int iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;
};

struct DdFit {
    DirichletParams params;
    FitReport report;
};

// Thrown when the gradient tolerance is not met within max_iter; carries the
// best iterate seen so far.
class NonConvergenceError : public NumericError {
public:
    NonConvergenceError(const std::string& msg, DdFit best)
        : NumericError(msg), best_(std::move(best)) {}
    const DdFit& best() const { return best_; }

private:
    DdFit best_;
};

// Maximum-likelihood fit: moment-matched start, inverse-digamma fixed-point
// sweeps, then Newton with the diagonal-plus-rank-one Hessian solved in
// closed form. The log-likelihood is concave, so damped Newton converges.
// A non-null init replaces the built-in starting point (warm start).
DdFit dd_mle(const SufficientStats& stats, const SolverOptions& opts = {},
             const DirichletParams* init = nullptr);

// n draws as normalized gamma variates, one row per draw.
Matrix dd_sample(const DirichletParams& params, std::size_t n, Rng& rng);

} // namespace ndd
