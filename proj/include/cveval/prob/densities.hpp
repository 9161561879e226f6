#pragma once

#include <cstdint>
#include <span>

#include "cveval/prob/linalg.hpp"

namespace cveval::prob {

// Thread-safe log|Gamma(x)| for x > 0.
double log_gamma(double x);

double normal_logpdf(double x, double mean, double sd);
double poisson_logpmf(std::int64_t k, double lambda);
double binomial_logpmf(std::int64_t k, std::int64_t n, double p);
double gamma_logpdf(double x, double shape, double scale);
double inverse_gamma_logpdf(double x, double shape, double scale);
double dirichlet_logpdf(std::span<const double> x, std::span<const double> alpha);

// Multivariate normal log density from a covariance or a precision matrix.
// A matrix that is not SPD raises DecompositionError.
double mvn_logpdf_cov(std::span<const double> x, std::span<const double> mean,
                      const SymMatrix& covariance);
double mvn_logpdf_prec(std::span<const double> x, std::span<const double> mean,
                       const SymMatrix& precision);

}  // namespace cveval::prob
