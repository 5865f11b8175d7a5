#pragma once

// Shared numeric oracles for the test suite: Gauss-Legendre rules, simplex
// quadrature, adaptive Simpson, golden-section maximization, and empirical
// CDF distances. Everything here is deliberately independent of the library's
// own algorithms.

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace testutil {

// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double z1, pp;
        do {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            z1 = z;
            z = z1 - p0 / pp;
        } while (std::fabs(z - z1) > 1e-15);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

// Integral of f(x1, x2) over the open 2-simplex {x1, x2 > 0, x1 + x2 < 1}.
// Substitutions x1 = s t, x2 = s (1 - t) with s = sin^2(theta), t = sin^2(phi)
// absorb the integrable edge singularities of Dirichlet densities.
inline double simplex2_integrate(const std::function<double(double, double)>& f,
                                 int nq = 96) {
    std::vector<double> gx, gw;
    gauss_legendre(nq, gx, gw);
    const double half = M_PI / 4.0;
    double total = 0.0;
    for (int i = 0; i < nq; ++i) {
        const double theta = half * (gx[i] + 1.0);
        const double st = std::sin(theta), ct = std::cos(theta);
        const double s = st * st;
        for (int j = 0; j < nq; ++j) {
            const double phi = half * (gx[j] + 1.0);
            const double sp = std::sin(phi), cp = std::cos(phi);
            const double t = sp * sp;
            const double jac = s * (2.0 * st * ct) * (2.0 * sp * cp) * half * half;
            total += gw[i] * gw[j] * f(s * t, s * (1.0 - t)) * jac;
        }
    }
    return total;
}

inline double adaptive_simpson_impl(const std::function<double(double)>& f, double a,
                                    double b, double fa, double fm, double fb,
                                    double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_impl(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_impl(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol = 1e-10, int depth = 48) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_impl(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Golden-section maximization of a unimodal function on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         double tol = 1e-10) {
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol * (1.0 + std::fabs(a) + std::fabs(b))) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Kolmogorov-Smirnov statistic of a sample against a CDF.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double c = cdf(sample[i]);
        d = std::max(d, std::fabs(c - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - c));
    }
    return d;
}

} // namespace testutil
