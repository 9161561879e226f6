#include "cveval/prob/densities.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cveval/error.hpp"

namespace cveval::prob {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

void check_mvn_dims(std::span<const double> x, std::span<const double> mean, std::size_t n) {
  if (x.size() != n || mean.size() != n) throw ArgumentError("mvn_logpdf: dimension mismatch");
}
}  // namespace

double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

double normal_logpdf(double x, double mean, double sd) {
  if (!(sd > 0.0)) throw ArgumentError("normal_logpdf: sd must be positive");
  const double z = (x - mean) / sd;
  return -kLogSqrt2Pi - std::log(sd) - 0.5 * z * z;
}

double poisson_logpmf(std::int64_t k, double lambda) {
  if (!(lambda >= 0.0)) throw ArgumentError("poisson_logpmf: lambda must be nonnegative");
  if (k < 0) return kNegInf;
  if (lambda == 0.0) return k == 0 ? 0.0 : kNegInf;
  const double kd = static_cast<double>(k);
  return kd * std::log(lambda) - lambda - log_gamma(kd + 1.0);
}

double binomial_logpmf(std::int64_t k, std::int64_t n, double p) {
  if (n < 0) throw ArgumentError("binomial_logpmf: n must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("binomial_logpmf: p outside [0, 1]");
  if (k < 0 || k > n) return kNegInf;
  if (p == 0.0) return k == 0 ? 0.0 : kNegInf;
  if (p == 1.0) return k == n ? 0.0 : kNegInf;
  const double kd = static_cast<double>(k);
  const double nd = static_cast<double>(n);
  return log_gamma(nd + 1.0) - log_gamma(kd + 1.0) - log_gamma(nd - kd + 1.0) +
         kd * std::log(p) + (nd - kd) * std::log1p(-p);
}

double gamma_logpdf(double x, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw ArgumentError("gamma_logpdf: invalid parameters");
  if (x <= 0.0) return kNegInf;
  return (shape - 1.0) * std::log(x) - x / scale - log_gamma(shape) - shape * std::log(scale);
}

double inverse_gamma_logpdf(double x, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw ArgumentError("inverse_gamma_logpdf: invalid parameters");
  if (x <= 0.0) return kNegInf;
  return shape * std::log(scale) - log_gamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double dirichlet_logpdf(std::span<const double> x, std::span<const double> alpha) {
  if (x.size() != alpha.size() || x.empty())
    throw ArgumentError("dirichlet_logpdf: dimension mismatch");
  double alpha_sum = 0.0;
  double acc = 0.0;
  double x_sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (!(alpha[k] > 0.0)) throw ArgumentError("dirichlet_logpdf: alpha must be positive");
    if (x[k] < 0.0) return kNegInf;
    alpha_sum += alpha[k];
    x_sum += x[k];
    acc += (alpha[k] - 1.0) * std::log(x[k]) - log_gamma(alpha[k]);
  }
  if (std::fabs(x_sum - 1.0) > 1e-9) return kNegInf;
  return acc + log_gamma(alpha_sum);
}

double mvn_logpdf_cov(std::span<const double> x, std::span<const double> mean,
                      const SymMatrix& covariance) {
  const std::size_t n = covariance.size();
  check_mvn_dims(x, mean, n);
  const Matrix l = cholesky(covariance);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = x[i] - mean[i];
  const auto z = forward_substitute(l, r);
  double quad = 0.0;
  for (double v : z) quad += v * v;
  return -static_cast<double>(n) * kLogSqrt2Pi - 0.5 * cholesky_log_det(l) - 0.5 * quad;
}

double mvn_logpdf_prec(std::span<const double> x, std::span<const double> mean,
                       const SymMatrix& precision) {
  const std::size_t n = precision.size();
  check_mvn_dims(x, mean, n);
  const Matrix l = cholesky(precision);
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = x[i] - mean[i];
  // r^T Q r = |L^T r|^2
  double quad = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double v = 0.0;
    for (std::size_t i = j; i < n; ++i) v += l(i, j) * r[i];
    quad += v * v;
  }
  return -static_cast<double>(n) * kLogSqrt2Pi + 0.5 * cholesky_log_det(l) - 0.5 * quad;
}

}  // namespace cveval::prob
