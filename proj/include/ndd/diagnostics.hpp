#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ndd/dirichlet.hpp"
#include "ndd/matrix.hpp"
#include "ndd/ndd_model.hpp"
#include "ndd/tree.hpp"

namespace ndd {

// Probability-integral-transform residuals on the standard-normal scale.
// Terminal marginals use the exact beta CDF when the terminal hangs directly
// off the root and the saddlepoint product CDF otherwise. CDF values are
// clamped to [1e-12, 1 - 1e-12] before the normal quantile; clamped cells
// are flagged, so every residual is finite.
struct ResidualMatrix {
    Matrix r;
    std::vector<std::uint8_t> clamped; // row-major n x p
    int clamp_count = 0;
};

ResidualMatrix pseudo_residuals(const NddModel& model, const Matrix& x);

struct InfluenceOptions {
    SolverOptions solver{};
    int threads = 1; // leave-one-out refits are row-independent
};

struct InfluenceReport {
    std::vector<double> ld;
    std::vector<double> aitch;
    std::vector<std::uint8_t> refit_failed; // flagged rows hold NaN in ld
    std::vector<int> refit_iterations;
    FitResult full; // the all-rows fit the displacements are measured against
};

// LD_i = 2 (l(a) - l(a_(i))) with both log-likelihoods taken on the full
// data; a_(i) is the MLE with row i removed, solved from downdated
// sufficient statistics and warm-started at the full-data solution.
std::vector<double> likelihood_displacement(const Tree& tree, const Matrix& x,
                                            const InfluenceOptions& opts = {});

// Distance between two positive vectors in the centered-log-ratio geometry;
// scale-free in either argument, and a metric.
double aitchison(const double* u, const double* v, std::size_t p);

// Row-wise Aitchison distance from the model's mean composition.
std::vector<double> aitchison_distance(const NddModel& model, const Matrix& x);

// Both influence measures plus refit metadata in one pass.
InfluenceReport influence_report(const Tree& tree, const Matrix& x,
                                 const InfluenceOptions& opts = {});

// Plot-ready marginal overlay for one terminal: normalized density and CDF
// over a sorted grid in (0, 1).
struct MarginalTable {
    std::vector<double> x;
    std::vector<double> pdf;
    std::vector<double> cdf;
};

MarginalTable marginal_fit_table(const NddModel& model, int col,
                                 const std::vector<double>& grid);

} // namespace ndd
