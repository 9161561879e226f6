#include "cveval/prob/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cveval/error.hpp"
#include "cveval/prob/densities.hpp"
#include "cveval/prob/special.hpp"

namespace cveval::prob {

double RngStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double draw_uniform(RngStream& rng, double lo, double hi) {
  if (!(hi > lo)) throw ArgumentError("draw_uniform: empty interval");
  return lo + (hi - lo) * rng.uniform();
}

double draw_normal(RngStream& rng, double mean, double sd) {
  if (!(sd >= 0.0)) throw ArgumentError("draw_normal: sd must be nonnegative");
  return mean + sd * rng.normal();
}

double draw_truncated_normal(RngStream& rng, double mean, double sd, double lo, double hi) {
  if (!(sd > 0.0)) throw ArgumentError("draw_truncated_normal: sd must be positive");
  if (!(hi > lo)) throw ArgumentError("draw_truncated_normal: empty interval");
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  // Work in whichever tail keeps the probabilities away from 1.
  if (a > 0.0) {
    const double sa = normal_sf(a);
    const double sb = normal_sf(b);
    const double u = sb + (sa - sb) * rng.uniform();
    return mean - sd * normal_quantile(u);
  }
  const double pa = normal_cdf(a);
  const double pb = normal_cdf(b);
  if (!(pb > pa)) throw ArgumentError("draw_truncated_normal: interval has no mass");
  const double u = pa + (pb - pa) * rng.uniform();
  return std::clamp(mean + sd * normal_quantile(u), lo, hi);
}

namespace {

// log of a Gamma(shape, 1) draw; stays finite for tiny shapes.
double draw_log_gamma_unit(RngStream& rng, double shape) {
  if (shape < 1.0) {
    const double log_u = std::log(rng.uniform());
    return draw_log_gamma_unit(rng, shape + 1.0) + log_u / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v);
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

}  // namespace

double draw_gamma(RngStream& rng, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) throw ArgumentError("draw_gamma: invalid parameters");
  return scale * std::exp(draw_log_gamma_unit(rng, shape));
}

double draw_inverse_gamma(RngStream& rng, double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw ArgumentError("draw_inverse_gamma: invalid parameters");
  return scale * std::exp(-draw_log_gamma_unit(rng, shape));
}

std::vector<double> draw_dirichlet(RngStream& rng, std::span<const double> alpha) {
  if (alpha.empty()) throw ArgumentError("draw_dirichlet: empty parameter");
  std::vector<double> logs(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (!(alpha[k] > 0.0)) throw ArgumentError("draw_dirichlet: alpha must be positive");
    logs[k] = draw_log_gamma_unit(rng, alpha[k]);
  }
  const double hi = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double& v : logs) {
    v = std::exp(v - hi);
    total += v;
  }
  for (double& v : logs) v /= total;
  return logs;
}

std::size_t draw_categorical(RngStream& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ArgumentError("draw_categorical: weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw ArgumentError("draw_categorical: all weights are zero");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) last_positive = k;
    acc += weights[k];
    if (u < acc && weights[k] > 0.0) return k;
  }
  return last_positive;
}

std::size_t draw_categorical_log(RngStream& rng, std::span<const double> log_weights) {
  if (log_weights.empty()) throw ArgumentError("draw_categorical_log: empty weights");
  const double hi = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(hi)) throw ArgumentError("draw_categorical_log: no finite weight");
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(log_weights[k] - hi);
  return draw_categorical(rng, w);
}

std::int64_t draw_binomial(RngStream& rng, std::int64_t n, double p) {
  if (n < 0) throw ArgumentError("draw_binomial: n must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("draw_binomial: p outside [0, 1]");
  if (p == 0.0 || n == 0) return 0;
  if (p == 1.0) return n;
  // Sequential inversion of the CDF.
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::int64_t k = 0; k < n; ++k) {
    acc += std::exp(binomial_logpmf(k, n, p));
    if (u < acc) return k;
  }
  return n;
}

std::int64_t draw_poisson(RngStream& rng, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ArgumentError("draw_poisson: lambda must be finite and nonnegative");
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) {
    const double limit = std::exp(-lambda);
    std::int64_t k = 0;
    double prod = rng.uniform();
    while (prod > limit) {
      ++k;
      prod *= rng.uniform();
    }
    return k;
  }
  // Transformed rejection with squeeze (Hormann 1993).
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    const double v = rng.uniform();
    const double us = 0.5 - std::fabs(u);
    const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + static_cast<double>(k) * loglam - log_gamma(static_cast<double>(k) + 1.0))
      return k;
  }
}

}  // namespace cveval::prob
