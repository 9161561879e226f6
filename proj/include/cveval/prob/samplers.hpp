#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cveval/prob/rng.hpp"

namespace cveval::prob {

double draw_uniform(RngStream& rng, double lo, double hi);
double draw_normal(RngStream& rng, double mean, double sd);
// Normal restricted to [lo, hi] by inversion of the CDF.
double draw_truncated_normal(RngStream& rng, double mean, double sd, double lo, double hi);
double draw_gamma(RngStream& rng, double shape, double scale);
double draw_inverse_gamma(RngStream& rng, double shape, double scale);
std::vector<double> draw_dirichlet(RngStream& rng, std::span<const double> alpha);
// Index drawn with probability proportional to `weights` (nonnegative, not
// necessarily normalized).
std::size_t draw_categorical(RngStream& rng, std::span<const double> weights);
// Same, with weights supplied on the log scale.
std::size_t draw_categorical_log(RngStream& rng, std::span<const double> log_weights);
std::int64_t draw_binomial(RngStream& rng, std::int64_t n, double p);
std::int64_t draw_poisson(RngStream& rng, double lambda);

}  // namespace cveval::prob
