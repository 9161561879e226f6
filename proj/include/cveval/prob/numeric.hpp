#pragma once

#include <span>

namespace cveval::prob {

// log(sum_j exp(x_j)) evaluated around the maximum. Entries may be -inf; the
// result is -inf exactly when every entry is. Empty input is an ArgumentError.
double log_sum_exp(std::span<const double> xs);

// log((1/S) sum_j exp(x_j)).
double log_mean_exp(std::span<const double> xs);

double mean(std::span<const double> xs);

// Unbiased sample variance, denominator S - 1. Requires at least two values.
double sample_variance(std::span<const double> xs);

// Weighted counterparts. Weights are given on the log scale and need not be
// normalized; with equal weights they reduce to the unweighted versions.
double weighted_mean(std::span<const double> xs, std::span<const double> log_weights);

// Reliability-weighted variance, sum w (x - xbar)^2 / (W - sum w^2 / W).
double weighted_variance(std::span<const double> xs, std::span<const double> log_weights);

}  // namespace cveval::prob
