#include "cveval/models/latent_model.hpp"

#include "cveval/error.hpp"
#include "cveval/prob/numeric.hpp"

namespace cveval::models {

double LatentModel::int_logpred(std::size_t i, Row row, prob::RngStream& rng) const {
  std::vector<double> values, log_probs;
  if (latent_atoms(i, row, values, log_probs)) {
    for (std::size_t k = 0; k < values.size(); ++k) log_probs[k] += unit_logpred(i, row, values[k]);
    return prob::log_sum_exp(log_probs);
  }
  const std::size_t draws = integration_draws();
  if (draws == 0) throw ConfigurationError(family() + ": no integration draws configured");
  std::vector<double> terms(draws);
  for (auto& t : terms) t = unit_logpred(i, row, regen_latent(i, row, rng));
  return prob::log_mean_exp(terms);
}

double LatentModel::midp(std::size_t, Row, double) const {
  throw ConfigurationError(family() + ": no mid-p evaluation function");
}

}  // namespace cveval::models
