#include "cveval/prob/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "cveval/error.hpp"
#include "cveval/prob/densities.hpp"

namespace cveval::prob {

namespace {

constexpr double kCfTolerance = 1e-15;
constexpr int kMaxIterations = 100000;
constexpr double kTiny = 1e-300;

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kCfTolerance) return h;
  }
  throw NumericalError("incomplete_beta: continued fraction did not converge");
}

double gamma_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 0; n < kMaxIterations; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kCfTolerance) {
      return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
    }
  }
  throw NumericalError("gamma_p: series did not converge");
}

double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kCfTolerance) {
      return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
    }
  }
  throw NumericalError("gamma_q: continued fraction did not converge");
}

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw ArgumentError("normal_quantile: p outside [0, 1]");
  }
  // Acklam's rational approximation followed by Halley refinement.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    const double e = (p < 0.5) ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw ArgumentError("incomplete_beta: a, b must be positive");
  if (x < 0.0 || x > 1.0 || std::isnan(x)) throw ArgumentError("incomplete_beta: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw ArgumentError("gamma_p: a must be positive");
  if (x < 0.0 || std::isnan(x)) throw ArgumentError("gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw ArgumentError("gamma_q: a must be positive");
  if (x < 0.0 || std::isnan(x)) throw ArgumentError("gamma_q: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_continued_fraction(a, x);
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw ArgumentError("student_t_cdf: df must be positive");
  if (std::isnan(t)) throw ArgumentError("student_t_cdf: NaN statistic");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t > 0.0 ? 1.0 - tail : tail;
}

double chi_square_sf(double x, double df) {
  if (!(df > 0.0)) throw ArgumentError("chi_square_sf: df must be positive");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

namespace {

void check_binomial_args(std::int64_t r_obs, std::int64_t n, double p) {
  if (n < 0) throw ArgumentError("binomial tail: n must be nonnegative");
  if (r_obs < 0 || r_obs > n) throw ArgumentError("binomial tail: r_obs outside [0, n]");
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("binomial tail: p outside [0, 1]");
}

}  // namespace

double binomial_midp_tail(std::int64_t r_obs, std::int64_t n, double p) {
  check_binomial_args(r_obs, n, p);
  double upper = 0.0;
  for (std::int64_t k = n; k > r_obs; --k) upper += std::exp(binomial_logpmf(k, n, p));
  return upper + 0.5 * std::exp(binomial_logpmf(r_obs, n, p));
}

double binomial_midp_lower(std::int64_t r_obs, std::int64_t n, double p) {
  check_binomial_args(r_obs, n, p);
  double lower = 0.0;
  for (std::int64_t k = 0; k < r_obs; ++k) lower += std::exp(binomial_logpmf(k, n, p));
  return lower + 0.5 * std::exp(binomial_logpmf(r_obs, n, p));
}

double poisson_midp_tail(std::int64_t y_obs, double lambda) {
  if (y_obs < 0) throw ArgumentError("poisson tail: negative count");
  if (!(lambda > 0.0)) throw ArgumentError("poisson tail: lambda must be positive");
  const double above = gamma_p(static_cast<double>(y_obs) + 1.0, lambda);
  return above + 0.5 * std::exp(poisson_logpmf(y_obs, lambda));
}

double ks_uniform_pvalue(std::span<const double> values) {
  if (values.empty()) throw ArgumentError("ks_uniform_pvalue: empty sample");
  std::vector<double> u(values.begin(), values.end());
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - u[i]);
    d = std::max(d, u[i] - static_cast<double>(i) / n);
  }
  const double root = std::sqrt(n);
  const double lambda = (root + 0.12 + 0.11 / root) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::fabs(term) < 1e-16) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace cveval::prob
