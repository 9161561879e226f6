#include "cveval/prob/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cveval/error.hpp"

namespace cveval::prob {

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) throw ArgumentError("log_sum_exp: empty input");
  const double hi = *std::max_element(xs.begin(), xs.end());
  if (hi == -std::numeric_limits<double>::infinity()) return hi;
  if (std::isnan(hi) || std::isinf(hi)) {
    for (double x : xs) {
      if (std::isnan(x)) throw ArgumentError("log_sum_exp: NaN entry");
    }
    return hi;
  }
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

double log_mean_exp(std::span<const double> xs) {
  return log_sum_exp(xs) - std::log(static_cast<double>(xs.size()));
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw ArgumentError("mean: empty input");
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) throw ArgumentError("sample_variance: need at least two values");
  const double m = mean(xs);
  double ss = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double d = x - m;
    ss += d * d;
    comp += d;
  }
  // Corrected two-pass; comp is zero in exact arithmetic.
  const double n = static_cast<double>(xs.size());
  return std::max(0.0, (ss - comp * comp / n) / (n - 1.0));
}

namespace {

std::vector<double> normalized_weights(std::span<const double> log_weights) {
  const double lse = log_sum_exp(log_weights);
  std::vector<double> w(log_weights.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = std::exp(log_weights[j] - lse);
  return w;
}

}  // namespace

double weighted_mean(std::span<const double> xs, std::span<const double> log_weights) {
  if (xs.size() != log_weights.size()) throw ArgumentError("weighted_mean: size mismatch");
  const auto w = normalized_weights(log_weights);
  double acc = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) acc += w[j] * xs[j];
  return acc;
}

double weighted_variance(std::span<const double> xs, std::span<const double> log_weights) {
  if (xs.size() != log_weights.size()) throw ArgumentError("weighted_variance: size mismatch");
  if (xs.size() < 2) throw ArgumentError("weighted_variance: need at least two values");
  const auto w = normalized_weights(log_weights);
  double m = 0.0;
  double w2 = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    m += w[j] * xs[j];
    w2 += w[j] * w[j];
  }
  double ss = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) ss += w[j] * (xs[j] - m) * (xs[j] - m);
  const double denom = 1.0 - w2;
  if (denom <= 0.0) return 0.0;
  return std::max(0.0, ss / denom);
}

}  // namespace cveval::prob
