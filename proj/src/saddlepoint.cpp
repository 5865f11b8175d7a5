#include "ndd/saddlepoint.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ndd/errors.hpp"
#include "ndd/special_functions.hpp"

namespace ndd {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

void check_spec(const BetaProductSpec& spec) {
    if (spec.a.empty() || spec.a.size() != spec.b.size()) {
        throw ValidationError("beta product spec needs matching non-empty shape vectors");
    }
    for (std::size_t i = 0; i < spec.a.size(); ++i) {
        if (!(std::isfinite(spec.a[i]) && spec.a[i] > 0.0) ||
            !(std::isfinite(spec.b[i]) && spec.b[i] > 0.0)) {
            throw ValidationError("beta product spec requires finite positive shapes");
        }
    }
}

// Standard normal density.
double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi); }

template <typename F>
double simpson_rec(const F& f, double a, double fa, double b, double fb, double m,
                   double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

// Unnormalized saddlepoint density of Z = log X at z.
double density_z(const BetaProductSpec& spec, double z) {
    const SaddlepointSolution sol = solve_saddlepoint(spec, z);
    return std::exp(sol.K - sol.t_hat * z) / std::sqrt(kTwoPi * sol.K2);
}

// Legendre exponent t*K'(t) - K(t), the quantity under the square root in w.
// The direct difference cancels catastrophically when t is near 0 (K is a sum
// of large lgamma terms while the gap is O(t^2)), which turns 1/w into noise;
// there, use t*K'(t) - K(t) = integral of u*K''(u) over (0, t), whose
// integrand is smooth and positive-definite in the relevant range.
double legendre_gap(const BetaProductSpec& spec, const SaddlepointSolution& sol,
                    double z) {
    const double direct = sol.t_hat * z - sol.K;
    // The gap equals w^2/2; below ~1e-3 the direct difference carries lgamma
    // rounding noise that 1/w would amplify visibly.
    if (direct > 1e-3) return direct;
    if (sol.t_hat == 0.0) return 0.0;
    const auto f = [&spec](double u) { return u * cgf(spec, u, 2); };
    const double rough = 0.5 * cgf(spec, 0.0, 2) * sol.t_hat * sol.t_hat;
    const double gap =
        adaptive_simpson(f, 0.0, sol.t_hat, std::max(1e-300, 1e-13 * rough)) -
        sol.t_hat * (sol.K1 - z);
    return std::max(0.0, gap);
}

// Lugannani-Rice away from the mean of Z; requires |w| not too small.
double lr_formula(double w, double u) {
    return norm_cdf(w) + norm_pdf(w) * (1.0 / w - 1.0 / u);
}

double lr_cdf_main(const BetaProductSpec& spec, double z) {
    const SaddlepointSolution sol = solve_saddlepoint(spec, z);
    const double s = legendre_gap(spec, sol, z);
    const double w = std::copysign(std::sqrt(2.0 * s), sol.t_hat);
    const double u = sol.t_hat * std::sqrt(sol.K2);
    return lr_formula(w, u);
}

} // namespace

double BetaProductSpec::t_min() const {
    double lo = a.front();
    for (double v : a) lo = std::min(lo, v);
    return -lo;
}

BetaProductSpec beta_product_spec(const NddModel& model, int col) {
    validate_params(model.tree, model.params);
    if (col < 0 || col >= model.tree.n_terminals()) {
        throw ValidationError("terminal column out of range");
    }
    BetaProductSpec spec;
    for (const Tree::PathStep& step : model.tree.path_to_column(col)) {
        const double alpha = model.params[static_cast<std::size_t>(step.child_id)];
        double phi = 0.0;
        for (int c : model.tree.node(step.node).children) {
            phi += model.params[static_cast<std::size_t>(c)];
        }
        spec.a.push_back(alpha);
        spec.b.push_back(phi - alpha);
    }
    return spec;
}

double cgf(const BetaProductSpec& spec, double t, int order) {
    check_spec(spec);
    if (order < 0 || order > 4) {
        throw ValidationError("CGF derivative order must be between 0 and 4");
    }
    if (!(std::isfinite(t) && t > spec.t_min())) {
        std::ostringstream os;
        os << "CGF argument t = " << t << " outside domain t > " << spec.t_min();
        throw NumericError(os.str());
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < spec.m(); ++i) {
        const double ai = spec.a[i];
        const double bi = spec.b[i];
        if (order == 0) {
            sum += log_gamma(ai + bi) + log_gamma(t + ai) - log_gamma(t + ai + bi) -
                   log_gamma(ai);
        } else {
            sum += polygamma(order - 1, t + ai) - polygamma(order - 1, t + ai + bi);
        }
    }
    return sum;
}

SaddlepointSolution solve_saddlepoint(const BetaProductSpec& spec, double z) {
    check_spec(spec);
    if (!(std::isfinite(z) && z < 0.0)) {
        throw NumericError("saddlepoint target must be negative (z = log x, x in (0,1))");
    }
    const double tmin = spec.t_min();

    // K' is strictly increasing from -inf at tmin to 0 at +inf, so a bracket
    // always exists for z < 0.
    double lo = tmin;
    double eps = 0.5 * std::max(1.0, std::abs(tmin));
    while (true) {
        lo = tmin + eps;
        if (cgf(spec, lo, 1) < z) break;
        eps *= 0.0625;
        if (eps < 1e-300) throw NumericError("failed to bracket saddlepoint from below");
    }
    double hi = std::max(1.0, tmin + 1.0);
    while (cgf(spec, hi, 1) <= z) {
        hi *= 2.0;
        if (hi > 1e300) throw NumericError("failed to bracket saddlepoint from above");
    }

    double t = 0.0;
    if (!(t > lo && t < hi)) t = 0.5 * (lo + hi);
    double k1 = cgf(spec, t, 1);
    double best_t = t;
    double best_k1 = k1;
    // Iterate well past the documented 1e-12: near the mean, downstream
    // 1/u terms amplify any slack in t_hat.
    const double tol = 1e-14 * std::max(1.0, std::abs(z));
    for (int iter = 0; iter < 200 && std::abs(k1 - z) > tol; ++iter) {
        if (k1 > z) {
            hi = t;
        } else {
            lo = t;
        }
        const double k2 = cgf(spec, t, 2);
        double next = t - (k1 - z) / k2;
        if (!(std::isfinite(next) && next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == t) break;  // step below double resolution
        t = next;
        k1 = cgf(spec, t, 1);
        if (std::abs(k1 - z) < std::abs(best_k1 - z)) {
            best_t = t;
            best_k1 = k1;
        }
    }
    if (std::abs(k1 - z) > std::abs(best_k1 - z)) {
        t = best_t;
        k1 = best_k1;
    }
    if (std::abs(k1 - z) > 1e-10) {
        std::ostringstream os;
        os << "saddlepoint solver stalled: residual " << std::abs(k1 - z)
           << " with bracket [" << lo << ", " << hi << "]";
        throw NumericError(os.str());
    }

    SaddlepointSolution sol;
    sol.t_hat = t;
    sol.K = cgf(spec, t, 0);
    sol.K1 = k1;
    sol.K2 = cgf(spec, t, 2);
    sol.K3 = cgf(spec, t, 3);
    return sol;
}

double pdf_normalizer(const BetaProductSpec& spec) {
    check_spec(spec);
    const double z_lo = std::log(1e-9);
    const double z_hi = std::log1p(-1e-9);
    const auto f = [&spec](double z) { return density_z(spec, z); };

    // Panels anchored at the mean of Z keep concentrated densities visible to
    // the adaptive rule; a single span can place every probe in the far tails.
    const double mu = cgf(spec, 0.0, 1);
    const double sd = std::sqrt(cgf(spec, 0.0, 2));
    std::vector<double> cuts{z_lo};
    for (double k : {-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0}) {
        const double c = mu + k * sd;
        if (c > z_lo && c < z_hi) cuts.push_back(c);
    }
    cuts.push_back(z_hi);
    std::sort(cuts.begin(), cuts.end());

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        total += adaptive_simpson(f, cuts[i], cuts[i + 1], 1e-9 / (cuts.size() - 1));
    }
    return total;
}

double marginal_pdf(const BetaProductSpec& spec, double x, bool normalize) {
    check_spec(spec);
    if (!(std::isfinite(x) && x > 0.0 && x < 1.0)) {
        throw ValidationError("marginal density argument must lie strictly inside (0,1)");
    }
    double f = density_z(spec, std::log(x)) / x;
    if (normalize) f /= pdf_normalizer(spec);
    return f;
}

double marginal_cdf(const BetaProductSpec& spec, double x) {
    check_spec(spec);
    if (!(std::isfinite(x) && x > 0.0 && x < 1.0)) {
        throw ValidationError("marginal CDF argument must lie strictly inside (0,1)");
    }
    const double z = std::log(x);
    const SaddlepointSolution sol = solve_saddlepoint(spec, z);
    const double s = legendre_gap(spec, sol, z);
    const double w = std::copysign(std::sqrt(2.0 * s), sol.t_hat);

    double cdf;
    if (std::abs(w) >= 1e-4) {
        cdf = lr_formula(w, sol.t_hat * std::sqrt(sol.K2));
    } else {
        // Both 1/w and 1/u blow up as z approaches the mean of Z, where the
        // exact limit is available in closed form. Bridge the window with a
        // linear interpolation anchored at that limit.
        const double z0 = cgf(spec, 0.0, 1);
        const double k2 = cgf(spec, 0.0, 2);
        const double k3 = cgf(spec, 0.0, 3);
        const double f0 = 0.5 + k3 / (6.0 * std::sqrt(kTwoPi) * std::pow(k2, 1.5));
        const double delta = 1e-3 * std::sqrt(k2);
        if (z <= z0) {
            const double fl = lr_cdf_main(spec, z0 - delta);
            cdf = f0 + (f0 - fl) * (z - z0) / delta;
        } else {
            const double fr = lr_cdf_main(spec, z0 + delta);
            cdf = f0 + (fr - f0) * (z - z0) / delta;
        }
    }
    return std::clamp(cdf, 1e-15, 1.0 - 1e-15);
}

} // namespace ndd
