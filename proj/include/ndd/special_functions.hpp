#pragma once

// Scalar special functions used throughout the library. All functions are
// pure and thread-safe.

namespace ndd {

// ln Gamma(x). Requires x > 0.
double log_gamma(double x);

// ln Beta(a, b) = lnG(a) + lnG(b) - lnG(a+b). Requires a, b > 0.
double log_beta(double a, double b);

// m-th derivative of the digamma function; m = 0 is digamma itself.
// Supported orders m in {0, 1, 2, 3}. Requires x > 0.
double polygamma(int m, double x);

// Unique x > 0 with digamma(x) = y; defined for all finite y.
double inverse_digamma(double y);

// Standard normal CDF.
double norm_cdf(double z);

// Standard normal quantile. Requires p in (0, 1).
double norm_quantile(double p);

// Regularized incomplete beta I_x(a, b), the Beta(a, b) CDF at x.
// Requires a, b > 0 and x in [0, 1].
double inc_beta_reg(double a, double b, double x);

} // namespace ndd
