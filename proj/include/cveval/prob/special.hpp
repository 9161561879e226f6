#pragma once

#include <cstdint>
#include <span>

namespace cveval::prob {

double normal_cdf(double z);
// Upper tail 1 - Phi(z) without cancellation for large z.
double normal_sf(double z);
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b); continued fraction, tolerance 1e-12.
double incomplete_beta(double a, double b, double x);

// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double student_t_cdf(double t, double df);

// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double df);

// Pr(Y > r_obs) + 0.5 Pr(Y = r_obs) for Y ~ Binomial(n, p).
double binomial_midp_tail(std::int64_t r_obs, std::int64_t n, double p);
// The complementary tail Pr(Y < r_obs) + 0.5 Pr(Y = r_obs).
double binomial_midp_lower(std::int64_t r_obs, std::int64_t n, double p);

// Pr(Y > y_obs) + 0.5 Pr(Y = y_obs) for Y ~ Poisson(lambda).
double poisson_midp_tail(std::int64_t y_obs, double lambda);

// Asymptotic p-value of the one-sample Kolmogorov-Smirnov test against
// Uniform(0, 1), with Stephens' finite-sample correction.
double ks_uniform_pvalue(std::span<const double> values);

}  // namespace cveval::prob
