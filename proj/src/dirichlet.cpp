#include "ndd/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "ndd/num_format.hpp"
#include "ndd/special_functions.hpp"

namespace ndd {

namespace {

void check_params(const DirichletParams& params) {
    if (params.alpha.size() < 2)
        throw ValidationError("dirichlet: need at least 2 components");
    for (double a : params.alpha)
        if (!(a > 0.0) || !std::isfinite(a))
            throw NumericError("dirichlet: alpha entries must be positive and finite");
}

} // namespace

SufficientStats compute_stats(const Matrix& x) {
    if (x.rows == 0 || x.cols < 2)
        throw ValidationError("compute_stats: need at least 1 row and 2 columns");
    SufficientStats s;
    s.n = x.rows;
    s.mean_log.assign(x.cols, 0.0);
    s.mean.assign(x.cols, 0.0);
    s.mean_sq_first = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double rowsum = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double v = x(i, j);
            if (!(v > 0.0) || !(v < 1.0))
                throw ValidationError("compute_stats: row " + std::to_string(i) +
                                      " column " + std::to_string(j) +
                                      " not strictly inside (0,1)");
            rowsum += v;
            s.mean_log[j] += std::log(v);
            s.mean[j] += v;
        }
        s.mean_sq_first += x(i, 0) * x(i, 0);
        if (std::fabs(rowsum - 1.0) > 1e-8)
            throw ValidationError("compute_stats: row " + std::to_string(i) +
                                  " sums to " + format_double(rowsum));
    }
    const double inv_n = 1.0 / static_cast<double>(s.n);
    for (std::size_t j = 0; j < x.cols; ++j) {
        s.mean_log[j] *= inv_n;
        s.mean[j] *= inv_n;
    }
    s.mean_sq_first *= inv_n;
    for (std::size_t j = 0; j < x.cols && s.degenerate_column < 0; ++j) {
        double lo = x(0, j), hi = x(0, j);
        for (std::size_t i = 1; i < x.rows; ++i) {
            lo = std::fmin(lo, x(i, j));
            hi = std::fmax(hi, x(i, j));
        }
        if (lo == hi && x.rows > 1) s.degenerate_column = static_cast<int>(j);
    }
    return s;
}

double dd_log_density(const DirichletParams& params, const double* x, std::size_t d) {
    check_params(params);
    if (d != params.dim())
        throw ValidationError("dd_log_density: dimension mismatch");
    double sum = 0.0, ll = log_gamma(params.phi());
    for (std::size_t j = 0; j < d; ++j) {
        if (!(x[j] > 0.0) || !(x[j] < 1.0))
            throw ValidationError("dd_log_density: point must be strictly inside the simplex");
        sum += x[j];
        ll += (params.alpha[j] - 1.0) * std::log(x[j]) - log_gamma(params.alpha[j]);
    }
    if (std::fabs(sum - 1.0) > 1e-8)
        throw ValidationError("dd_log_density: point sums to " + format_double(sum));
    return ll;
}

namespace {

double loglik_impl(const DirichletParams& params, const SufficientStats& stats,
                   bool adjusted) {
    check_params(params);
    if (params.dim() != stats.mean_log.size())
        throw ValidationError("dd_loglik: dimension mismatch");
    const double n = static_cast<double>(stats.n);
    double ll = log_gamma(params.phi());
    for (std::size_t j = 0; j < params.dim(); ++j) {
        ll -= log_gamma(params.alpha[j]);
        ll += params.alpha[j] * stats.mean_log[j];
        if (!adjusted) ll -= stats.mean_log[j];
    }
    return n * ll;
}

} // namespace

double dd_loglik(const DirichletParams& params, const SufficientStats& stats) {
    return loglik_impl(params, stats, false);
}

double dd_adjusted_loglik(const DirichletParams& params, const SufficientStats& stats) {
    return loglik_impl(params, stats, true);
}

std::vector<double> dd_loglik_gradient(const DirichletParams& params,
                                       const SufficientStats& stats) {
    check_params(params);
    if (params.dim() != stats.mean_log.size())
        throw ValidationError("dd_loglik_gradient: dimension mismatch");
    const double n = static_cast<double>(stats.n);
    const double dig_phi = polygamma(0, params.phi());
    std::vector<double> g(params.dim());
    for (std::size_t j = 0; j < params.dim(); ++j)
        g[j] = n * (dig_phi - polygamma(0, params.alpha[j]) + stats.mean_log[j]);
    return g;
}

DdFit dd_mle(const SufficientStats& stats, const SolverOptions& opts,
             const DirichletParams* init) {
    const std::size_t d = stats.mean_log.size();
    if (stats.n < 2)
        throw ValidationError("dd_mle: need at least 2 observations");
    if (d < 2) throw ValidationError("dd_mle: need at least 2 components");
    if (stats.degenerate_column >= 0)
        throw ValidationError("dd_mle: column " +
                              std::to_string(stats.degenerate_column) +
                              " is constant at machine level");
    for (double ml : stats.mean_log)
        if (!std::isfinite(ml) || ml >= 0.0)
            throw ValidationError("dd_mle: mean_log entries must be finite and negative");

    DirichletParams params;
    if (init) {
        check_params(*init);
        if (init->dim() != d) throw ValidationError("dd_mle: warm start dimension mismatch");
        params = *init;
    } else {
        params.alpha.assign(d, 1.0);
        if (stats.has_moments()) {
            // Moment matching on the first component: phi from E[X1], E[X1^2].
            const double m1 = stats.mean[0];
            const double v1 = stats.mean_sq_first - m1 * m1;
            if (v1 > 0.0) {
                const double phi0 = (m1 - stats.mean_sq_first) / v1;
                if (phi0 > 0.0 && std::isfinite(phi0))
                    for (std::size_t j = 0; j < d; ++j)
                        params.alpha[j] = std::fmax(stats.mean[j] * phi0, 1e-8);
            }
        }
        // A few fixed-point sweeps sharpen the start cheaply.
        for (int sweep = 0; sweep < 5; ++sweep) {
            const double dig_phi = polygamma(0, params.phi());
            for (std::size_t j = 0; j < d; ++j)
                params.alpha[j] = inverse_digamma(dig_phi + stats.mean_log[j]);
        }
    }

    DdFit best{params, FitReport{}};
    double ll = dd_loglik(params, stats);
    double best_grad = std::numeric_limits<double>::infinity();
    const double n = static_cast<double>(stats.n);

    for (int it = 1; it <= opts.max_iter; ++it) {
        const std::vector<double> g = dd_loglik_gradient(params, stats);
        double gnorm = 0.0;
        for (double gj : g) gnorm = std::fmax(gnorm, std::fabs(gj));
        if (gnorm < best_grad) {
            best_grad = gnorm;
            best.params = params;
            best.report.iterations = it - 1;
            best.report.grad_norm = gnorm;
        }
        if (gnorm <= opts.grad_tol) {
            best.report.converged = true;
            return best;
        }

        // Newton direction for the Hessian c 11^T + diag(q), q_j < 0 < c,
        // inverted by the rank-one update formula.
        const double c = n * polygamma(1, params.phi());
        std::vector<double> q(d);
        double sum_gq = 0.0, sum_iq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            q[j] = -n * polygamma(1, params.alpha[j]);
            sum_gq += g[j] / q[j];
            sum_iq += 1.0 / q[j];
        }
        const double b = sum_gq / (1.0 / c + sum_iq);
        std::vector<double> step(d);
        for (std::size_t j = 0; j < d; ++j) step[j] = (g[j] - b) / q[j];

        // Concavity makes -step an ascent direction; halve until the iterate
        // is positive and the log-likelihood does not drop. "Does not drop"
        // must allow for the objective's own rounding floor: for large alpha
        // the value is a small residue of lgamma terms that dwarf it, so a
        // fixed relative slack would reject genuine ascent steps near the
        // optimum and stall the iteration.
        double term_scale = std::fabs(log_gamma(params.phi()));
        for (std::size_t j = 0; j < d; ++j)
            term_scale += std::fabs(log_gamma(params.alpha[j])) +
                          std::fabs(params.alpha[j] * stats.mean_log[j]);
        const double slack = 1e-12 * (1.0 + std::fabs(ll)) + 8e-16 * n * term_scale;
        double t = 1.0;
        bool moved = false;
        for (int half = 0; half < 60; ++half, t *= 0.5) {
            DirichletParams trial = params;
            bool positive = true;
            for (std::size_t j = 0; j < d; ++j) {
                trial.alpha[j] = params.alpha[j] - t * step[j];
                if (!(trial.alpha[j] > 0.0)) {
                    positive = false;
                    break;
                }
            }
            if (!positive) continue;
            const double trial_ll = dd_loglik(trial, stats);
            if (trial_ll >= ll - slack) {
                params = std::move(trial);
                ll = trial_ll;
                moved = true;
                break;
            }
        }
        if (!moved) break; // step collapsed; gradient check below decides
    }

    const std::vector<double> g = dd_loglik_gradient(best.params, stats);
    double gnorm = 0.0;
    for (double gj : g) gnorm = std::fmax(gnorm, std::fabs(gj));
    best.report.grad_norm = gnorm;
    if (gnorm <= opts.grad_tol) {
        best.report.converged = true;
        return best;
    }
    throw NonConvergenceError(
        "dd_mle: gradient max-norm " + format_double(gnorm) + " above tolerance " +
            format_double(opts.grad_tol) + " after " + std::to_string(opts.max_iter) +
            " iterations",
        best);
}

Matrix dd_sample(const DirichletParams& params, std::size_t n, Rng& rng) {
    check_params(params);
    if (n < 1) throw ValidationError("dd_sample: need n >= 1");
    Matrix x(n, params.dim());
    for (std::size_t i = 0; i < n; ++i) rng.dirichlet(params.alpha, x.row(i));
    return x;
}

} // namespace ndd
