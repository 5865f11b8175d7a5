#include "ndd/ndd_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ndd/errors.hpp"
#include "ndd/num_format.hpp"
#include "ndd/special_functions.hpp"

namespace ndd {

namespace {

// log beta(k) = lgamma(phi_k) - sum over children lgamma(alpha_child).
double log_beta_node(const Tree& tree, const ParamVector& params, int k) {
    double lb = log_gamma(phi(tree, params, k));
    for (int c : tree.node(k).children) lb -= log_gamma(params[c]);
    return lb;
}

} // namespace

double ndd_log_density(const NddModel& model, const double* x, std::size_t p) {
    const Tree& tree = model.tree;
    validate_params(tree, model.params);
    if (p != static_cast<std::size_t>(tree.n_terminals()))
        throw ValidationError("ndd_log_density: dimension mismatch");
    double sum = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        if (!(x[j] > 0.0) || !(x[j] < 1.0))
            throw ValidationError(
                "ndd_log_density: point must be strictly inside the simplex");
        sum += x[j];
    }
    if (std::fabs(sum - 1.0) > 1e-8)
        throw ValidationError("ndd_log_density: point sums to " + format_double(sum));

    double ll = 0.0;
    for (int k : tree.nonterminals()) ll += log_beta_node(tree, model.params, k);
    for (int j = 0; j < tree.n_terminals(); ++j)
        ll += (model.params[tree.terminal_id(j)] - 1.0) * std::log(x[j]);
    for (int s : tree.interior()) {
        double subtree_sum = 0.0;
        for (int col : tree.subtree_columns(s)) subtree_sum += x[col];
        ll += delta(tree, model.params, s) * std::log(subtree_sum);
    }
    return ll;
}

std::vector<SufficientStats> node_stats(const Tree& tree, const Matrix& x) {
    const BranchData b = to_branches(tree, x);
    std::vector<SufficientStats> stats;
    stats.reserve(b.per_node.size());
    for (const Matrix& m : b.per_node) stats.push_back(compute_stats(m));
    return stats;
}

namespace {

// Per-terminal mean log x reassembled from branch-level stats: each edge
// (k -> child A) contributes its mean log branch proportion once per
// terminal below A.
double mean_log_total_from_stats(const Tree& tree,
                                 const std::vector<SufficientStats>& stats) {
    const auto& nts = tree.nonterminals();
    double total = 0.0;
    for (std::size_t ki = 0; ki < nts.size(); ++ki) {
        const auto& children = tree.node(nts[ki]).children;
        for (std::size_t c = 0; c < children.size(); ++c)
            total += static_cast<double>(tree.subtree_columns(children[c]).size()) *
                     stats[ki].mean_log[c];
    }
    return total;
}

DirichletParams node_params(const Tree& tree, const ParamVector& params, int k) {
    DirichletParams dp;
    for (int c : tree.node(k).children) dp.alpha.push_back(params[c]);
    return dp;
}

} // namespace

double ndd_loglik_from_stats(const Tree& tree, const ParamVector& params,
                             const std::vector<SufficientStats>& stats) {
    validate_params(tree, params);
    const auto& nts = tree.nonterminals();
    if (stats.size() != nts.size())
        throw ValidationError("ndd_loglik_from_stats: stats do not match tree");
    const double n = static_cast<double>(stats[0].n);
    double ll = 0.0;
    for (std::size_t ki = 0; ki < nts.size(); ++ki)
        ll += dd_adjusted_loglik(node_params(tree, params, nts[ki]), stats[ki]);
    return ll - n * mean_log_total_from_stats(tree, stats);
}

double ndd_loglik(const NddModel& model, const Matrix& x) {
    return ndd_loglik_from_stats(model.tree, model.params,
                                 node_stats(model.tree, x));
}

double ndd_loglik_direct(const NddModel& model, const Matrix& x) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i)
        ll += ndd_log_density(model, x.row(i), x.cols);
    return ll;
}

FitResult ndd_mle_from_stats(const Tree& tree,
                             const std::vector<SufficientStats>& stats,
                             std::size_t n, const SolverOptions& opts,
                             const ParamVector* warm) {
    const auto& nts = tree.nonterminals();
    if (stats.size() != nts.size())
        throw ValidationError("ndd_mle_from_stats: stats do not match tree");

    FitResult fit;
    fit.model.tree = tree;
    fit.model.params.assign(tree.node_count(), 0.0);
    fit.n = n;
    fit.q = tree.node_count() - 1;

    for (std::size_t ki = 0; ki < nts.size(); ++ki) {
        const int k = nts[ki];
        const auto& children = tree.node(k).children;
        DirichletParams init;
        if (warm) {
            for (int c : children) init.alpha.push_back((*warm)[c]);
        }
        DdFit node_fit;
        try {
            node_fit = dd_mle(stats[ki], opts, warm ? &init : nullptr);
        } catch (const NonConvergenceError& e) {
            throw NonConvergenceError("node '" + tree.node(k).label +
                                          "': " + e.what(),
                                      e.best());
        } catch (const ValidationError& e) {
            throw ValidationError("node '" + tree.node(k).label + "': " + e.what());
        }
        for (std::size_t c = 0; c < children.size(); ++c)
            fit.model.params[children[c]] = node_fit.params.alpha[c];
        fit.converged = fit.converged && node_fit.report.converged;
        fit.iterations += node_fit.report.iterations;
    }

    fit.loglik = ndd_loglik_from_stats(tree, fit.model.params, stats);
    fit.aic = -2.0 * fit.loglik + 2.0 * fit.q;
    fit.bic = -2.0 * fit.loglik + fit.q * std::log(static_cast<double>(n));
    return fit;
}

FitResult ndd_mle(const Tree& tree, const Matrix& x, const SolverOptions& opts) {
    return ndd_mle_from_stats(tree, node_stats(tree, x), x.rows, opts);
}

Matrix ndd_sample(const NddModel& model, std::size_t n, Rng& rng) {
    const Tree& tree = model.tree;
    validate_params(tree, model.params);
    if (n < 1) throw ValidationError("ndd_sample: need n >= 1");
    BranchData b;
    for (int k : tree.nonterminals()) {
        const auto& children = tree.node(k).children;
        std::vector<double> alpha;
        alpha.reserve(children.size());
        for (int c : children) alpha.push_back(model.params[c]);
        Matrix m(n, children.size());
        for (std::size_t i = 0; i < n; ++i) rng.dirichlet(alpha, m.row(i));
        b.per_node.push_back(std::move(m));
    }
    return from_branches(tree, b);
}

MomentSummary ndd_moments(const NddModel& model) {
    const Tree& tree = model.tree;
    const ParamVector& a = model.params;
    validate_params(tree, a);
    const int p = tree.n_terminals();

    // First and second moments along each path, accumulated in log space.
    std::vector<double> mean(p), mean_sq(p);
    for (int j = 0; j < p; ++j) {
        double log_e1 = 0.0, log_e2 = 0.0;
        for (const auto& step : tree.path_to_column(j)) {
            const double aj = a[step.child_id];
            const double ph = phi(tree, a, step.node);
            log_e1 += std::log(aj) - std::log(ph);
            log_e2 += std::log(aj + 1.0) - std::log(ph + 1.0);
        }
        mean[j] = std::exp(log_e1);
        mean_sq[j] = std::exp(log_e1 + log_e2);
    }

    MomentSummary ms;
    ms.mean = mean;
    ms.sd.resize(p);
    ms.cov = Matrix(p, p);
    ms.corr = Matrix(p, p);
    for (int j = 0; j < p; ++j) {
        ms.cov(j, j) = mean_sq[j] - mean[j] * mean[j];
        ms.sd[j] = std::sqrt(ms.cov(j, j));
    }

    for (int j = 0; j < p; ++j) {
        const auto& pj = tree.path_to_column(j);
        for (int j2 = j + 1; j2 < p; ++j2) {
            const auto& pj2 = tree.path_to_column(j2);
            // Shared prefix of the two paths; the last shared node is L.
            std::size_t shared = 0;
            while (shared < pj.size() && shared < pj2.size() &&
                   pj[shared].node == pj2[shared].node &&
                   pj[shared].child_id == pj2[shared].child_id)
                ++shared;
            // Paths always agree on the root, then split at the last common
            // node; L is pj[shared].node.
            if (pj[shared].node != pj2[shared].node)
                throw NumericError("ndd_moments: paths disagree above the split node");
            const double phi_l = phi(tree, a, pj[shared].node);
            double k_factor = phi_l / (phi_l + 1.0);
            for (std::size_t s = 0; s < shared; ++s) {
                const double as = a[pj[s].child_id];
                const double ph = phi(tree, a, pj[s].node);
                const double term = (as + 1.0) / as * ph / (ph + 1.0);
                if (!(term > 1.0))
                    throw NumericError(
                        "ndd_moments: shared-path factor not > 1 at node '" +
                        tree.node(pj[s].node).label + "'");
                k_factor *= term;
            }
            const double cov = (k_factor - 1.0) * mean[j] * mean[j2];
            ms.cov(j, j2) = cov;
            ms.cov(j2, j) = cov;
        }
    }

    for (int j = 0; j < p; ++j) {
        ms.corr(j, j) = 1.0;
        for (int j2 = j + 1; j2 < p; ++j2) {
            double c = ms.cov(j, j2) / (ms.sd[j] * ms.sd[j2]);
            if (c > 1.0 && c < 1.0 + 1e-12) c = 1.0;
            if (c < -1.0 && c > -1.0 - 1e-12) c = -1.0;
            c = std::clamp(c, -1.0, 1.0);
            ms.corr(j, j2) = c;
            ms.corr(j2, j) = c;
        }
    }
    return ms;
}

} // namespace ndd
