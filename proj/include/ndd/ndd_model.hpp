#pragma once

#include <cstddef>
#include <vector>

#include "ndd/dirichlet.hpp"
#include "ndd/matrix.hpp"
#include "ndd/rng.hpp"
#include "ndd/tree.hpp"

namespace ndd {

struct NddModel {
    Tree tree;
    ParamVector params; // indexed by node id, root slot unused
};

struct MomentSummary {
    std::vector<double> mean; // sums to 1
    std::vector<double> sd;
    Matrix cov;  // symmetric, rows sum to 0
    Matrix corr; // unit diagonal, clamped to [-1, 1]
};

struct FitResult {
    NddModel model;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    int q = 0;          // parameter count: one alpha per non-root node
    std::size_t n = 0;
    bool converged = true;
    int iterations = 0; // summed over per-node fits
};

// Log density at one strictly-interior point (columns in terminal order).
double ndd_log_density(const NddModel& model, const double* x, std::size_t p);

// Branch-decomposed log-likelihood: per-node adjusted Dirichlet terms plus
// the alpha-free constant. This is the production evaluation path.
double ndd_loglik(const NddModel& model, const Matrix& x);

// The same quantity as a plain row sum of ndd_log_density. Kept as an
// independent code path to cross-check the decomposition.
double ndd_loglik_direct(const NddModel& model, const Matrix& x);

// Per-nonterminal sufficient statistics of the branch proportions, in
// Tree::nonterminals() order.
std::vector<SufficientStats> node_stats(const Tree& tree, const Matrix& x);

// Log-likelihood at fixed parameters from precomputed node stats.
double ndd_loglik_from_stats(const Tree& tree, const ParamVector& params,
                             const std::vector<SufficientStats>& stats);

// Maximum likelihood for a fixed tree: independent dd_mle per nonterminal
// node. Non-convergence at a node is rethrown tagged with the node label.
FitResult ndd_mle(const Tree& tree, const Matrix& x, const SolverOptions& opts = {});

// As ndd_mle but from precomputed stats; warm, when given, seeds every
// per-node solver (used by leave-one-out refits).
FitResult ndd_mle_from_stats(const Tree& tree,
                             const std::vector<SufficientStats>& stats,
                             std::size_t n, const SolverOptions& opts = {},
                             const ParamVector* warm = nullptr);

// n draws: independent Dirichlet branch vectors per nonterminal node (in
// pre-order, all rows of a node before the next node), composed to the
// terminal scale.
Matrix ndd_sample(const NddModel& model, std::size_t n, Rng& rng);

// Exact first and second moments of the terminal components.
MomentSummary ndd_moments(const NddModel& model);

} // namespace ndd
