#include "ndd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "ndd/errors.hpp"
#include "ndd/saddlepoint.hpp"
#include "ndd/special_functions.hpp"

namespace ndd {

namespace {

constexpr double kCdfClampLo = 1e-12;
constexpr double kCdfClampHi = 1.0 - 1e-12;

void check_composition(const Matrix& x, std::size_t p, const char* who) {
    if (x.cols != p)
        throw ValidationError(std::string(who) + ": data has " + std::to_string(x.cols) +
                              " columns, model has " + std::to_string(p) + " terminals");
    if (x.rows == 0) throw ValidationError(std::string(who) + ": no rows");
    for (std::size_t i = 0; i < x.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double v = x(i, j);
            if (!(v > 0.0) || !std::isfinite(v))
                throw ValidationError(std::string(who) + ": row " + std::to_string(i) +
                                      ", column " + std::to_string(j) +
                                      " is not strictly positive");
            sum += v;
        }
        if (std::fabs(sum - 1.0) > 1e-8)
            throw ValidationError(std::string(who) + ": row " + std::to_string(i) +
                                  " sums to " + std::to_string(sum));
    }
}

// Sufficient statistics with one branch-proportion row removed. The update
// is exact: every field is a plain average over rows.
SufficientStats downdate(const SufficientStats& full, const Matrix& rows, std::size_t i) {
    const double n = static_cast<double>(full.n);
    SufficientStats out = full;
    out.n = full.n - 1;
    const double m = n - 1.0;
    for (std::size_t j = 0; j < full.mean_log.size(); ++j) {
        out.mean_log[j] = (n * full.mean_log[j] - std::log(rows(i, j))) / m;
        out.mean[j] = (n * full.mean[j] - rows(i, j)) / m;
    }
    out.mean_sq_first = (n * full.mean_sq_first - rows(i, 0) * rows(i, 0)) / m;
    return out;
}

} // namespace

ResidualMatrix pseudo_residuals(const NddModel& model, const Matrix& x) {
    const Tree& tree = model.tree;
    validate_params(tree, model.params);
    const std::size_t p = static_cast<std::size_t>(tree.n_terminals());
    check_composition(x, p, "pseudo_residuals");

    ResidualMatrix out;
    out.r = Matrix(x.rows, p);
    out.clamped.assign(x.rows * p, 0);

    for (std::size_t j = 0; j < p; ++j) {
        const auto& path = tree.path_to_column(static_cast<int>(j));
        const bool single = path.size() == 1;
        double a = 0.0, b = 0.0;
        BetaProductSpec spec;
        if (single) {
            a = model.params[tree.terminal_id(static_cast<int>(j))];
            b = phi(tree, model.params, tree.root()) - a;
        } else {
            spec = beta_product_spec(model, static_cast<int>(j));
        }
        for (std::size_t i = 0; i < x.rows; ++i) {
            double f = single ? inc_beta_reg(a, b, x(i, j)) : marginal_cdf(spec, x(i, j));
            if (f < kCdfClampLo || f > kCdfClampHi) {
                f = std::clamp(f, kCdfClampLo, kCdfClampHi);
                out.clamped[i * p + j] = 1;
                ++out.clamp_count;
            }
            out.r(i, j) = norm_quantile(f);
        }
    }
    return out;
}

InfluenceReport influence_report(const Tree& tree, const Matrix& x,
                                 const InfluenceOptions& opts) {
    const std::size_t n = x.rows;
    if (n < 3) throw ValidationError("influence: need at least 3 rows");
    check_composition(x, static_cast<std::size_t>(tree.n_terminals()), "influence");

    const BranchData branches = to_branches(tree, x);
    const std::vector<SufficientStats> stats = node_stats(tree, x);

    InfluenceReport rep;
    rep.full = ndd_mle_from_stats(tree, stats, n, opts.solver);
    const double l_full = ndd_loglik_from_stats(tree, rep.full.model.params, stats);

    rep.ld.assign(n, 0.0);
    rep.refit_failed.assign(n, 0);
    rep.refit_iterations.assign(n, 0);

    const auto run_rows = [&](std::size_t lo, std::size_t hi) {
        std::vector<SufficientStats> loo(stats.size());
        for (std::size_t i = lo; i < hi; ++i) {
            for (std::size_t k = 0; k < stats.size(); ++k)
                loo[k] = downdate(stats[k], branches.per_node[k], i);
            try {
                const FitResult fit = ndd_mle_from_stats(tree, loo, n - 1, opts.solver,
                                                         &rep.full.model.params);
                const double l_i = ndd_loglik_from_stats(tree, fit.model.params, stats);
                rep.ld[i] = 2.0 * (l_full - l_i);
                rep.refit_iterations[i] = fit.iterations;
            } catch (const NumericError&) {
                rep.ld[i] = std::numeric_limits<double>::quiet_NaN();
                rep.refit_failed[i] = 1;
            }
        }
    };

    const int threads = std::clamp<int>(opts.threads, 1, static_cast<int>(n));
    if (threads == 1) {
        run_rows(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t lo = t * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(run_rows, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    rep.aitch = aitchison_distance(rep.full.model, x);
    return rep;
}

std::vector<double> likelihood_displacement(const Tree& tree, const Matrix& x,
                                            const InfluenceOptions& opts) {
    return influence_report(tree, x, opts).ld;
}

double aitchison(const double* u, const double* v, std::size_t p) {
    if (p < 2) throw ValidationError("aitchison: need at least 2 components");
    double mu = 0.0, mv = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        if (!(u[j] > 0.0) || !std::isfinite(u[j]) || !(v[j] > 0.0) || !std::isfinite(v[j]))
            throw ValidationError("aitchison: components must be strictly positive");
        mu += std::log(u[j]);
        mv += std::log(v[j]);
    }
    mu /= static_cast<double>(p);
    mv /= static_cast<double>(p);
    double ss = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        const double d = (std::log(u[j]) - mu) - (std::log(v[j]) - mv);
        ss += d * d;
    }
    return std::sqrt(ss);
}

std::vector<double> aitchison_distance(const NddModel& model, const Matrix& x) {
    const std::size_t p = static_cast<std::size_t>(model.tree.n_terminals());
    if (x.cols != p)
        throw ValidationError("aitchison_distance: column count does not match the model");
    const std::vector<double> mean = ndd_moments(model).mean;
    std::vector<double> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = aitchison(x.row(i), mean.data(), p);
    return out;
}

MarginalTable marginal_fit_table(const NddModel& model, int col,
                                 const std::vector<double>& grid) {
    const Tree& tree = model.tree;
    validate_params(tree, model.params);
    if (col < 0 || col >= tree.n_terminals())
        throw ValidationError("marginal_fit_table: column out of range");
    if (grid.empty()) throw ValidationError("marginal_fit_table: empty grid");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !(grid[i] < 1.0))
            throw ValidationError("marginal_fit_table: grid values must lie in (0, 1)");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw ValidationError("marginal_fit_table: grid must be strictly increasing");
    }

    MarginalTable out;
    out.x = grid;
    out.pdf.reserve(grid.size());
    out.cdf.reserve(grid.size());

    if (tree.path_to_column(col).size() == 1) {
        const double a = model.params[tree.terminal_id(col)];
        const double b = phi(tree, model.params, tree.root()) - a;
        const double lb = log_beta(a, b);
        for (double v : grid) {
            out.pdf.push_back(
                std::exp((a - 1.0) * std::log(v) + (b - 1.0) * std::log1p(-v) - lb));
            out.cdf.push_back(inc_beta_reg(a, b, v));
        }
    } else {
        const BetaProductSpec spec = beta_product_spec(model, col);
        const double z = pdf_normalizer(spec);
        for (double v : grid) {
            out.pdf.push_back(marginal_pdf(spec, v) / z);
            out.cdf.push_back(marginal_cdf(spec, v));
        }
    }
    return out;
}

} // namespace ndd
