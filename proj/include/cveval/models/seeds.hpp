#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <utility>

#include "cveval/models/data.hpp"
#include "cveval/models/latent_model.hpp"

namespace cveval::models {

// alpha_k ~ N(0, coef_variance); sigma2 ~ IG(sigma_shape, sigma_scale).
struct SeedsPrior {
  double coef_variance = 1e6;
  double sigma_shape = 0.001;
  double sigma_scale = 0.001;
};

// Inverse-gamma (shape, scale) of sigma2 given the plate effects.
std::pair<double, double> seeds_sigma2_conditional(std::span<const double> b,
                                                   const SeedsPrior& prior);

// logit p_i = a0 + a1 x1 + a2 x2 + a12 x1 x2 + b_i, b_i ~ N(0, sigma2).
class SeedsModel : public LatentModel {
 public:
  static constexpr std::size_t kCoefficients = 4;

  explicit SeedsModel(SeedsData data, std::size_t integration_draws = 30, SeedsPrior prior = {});

  std::string family() const override { return "seeds"; }
  std::size_t n_units() const override { return data_.size(); }
  std::vector<std::string> theta_names() const override;

  std::unique_ptr<ChainKernel> make_kernel(std::optional<std::size_t> holdout,
                                           prob::RngStream& init_rng) const override;

  double unit_logpred(std::size_t i, Row row, double latent) const override;
  double regen_latent(std::size_t i, Row row, prob::RngStream& rng) const override;
  std::size_t integration_draws() const override { return draws_; }
  double midp(std::size_t i, Row row, double latent) const override;

  const SeedsData& data() const { return data_; }
  const SeedsPrior& prior() const { return prior_; }

  // Fixed part of the linear predictor for plate i.
  double fixed_effect(std::size_t i, std::span<const double> coefficients) const;
  double success_probability(std::size_t i, Row row, double latent) const;

  // Same design, counts drawn from the model at the given
  // (a0, a1, a2, a12, sigma2).
  static SeedsData simulate(const SeedsData& design, std::span<const double> theta,
                            prob::RngStream& rng);

 private:
  SeedsData data_;
  std::size_t draws_;
  SeedsPrior prior_;
};

}  // namespace cveval::models
