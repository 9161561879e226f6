#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cveval/models/latent_model.hpp"

namespace cveval::models {

// mu_k ~ N(mean, variance), sigma2_k ~ IG(shape, scale), p ~ Dirichlet(1).
struct MixturePrior {
  double mean = 20.0;
  double variance = 1e4;
  double shape = 0.01;
  double scale = 0.2;

  // Centre at the sample mean; IG scale 0.01 times the sample variance.
  static MixturePrior from_data(std::span<const double> y);
};

struct MixtureParams {
  std::vector<double> mu;
  std::vector<double> sigma2;
  std::vector<double> p;
};

double mixture_nonint_logpred(double y, std::span<const double> mu,
                              std::span<const double> sigma2, std::size_t z);

// log sum_k p_k N(y | mu_k, sigma2_k).
double mixture_int_logpred(double y, std::span<const double> mu, std::span<const double> sigma2,
                           std::span<const double> p);

// Normalized P(z = k | y, theta).
std::vector<double> mixture_label_probs(double y, const MixtureParams& params);

// n draws from 0.25 N(-7,1) + 0.25 N(-2,1) + 0.25 N(1,1) + 0.25 N(7,1).
std::vector<double> mixture_simulate(std::size_t n, prob::RngStream& rng);

class MixtureModel : public LatentModel {
 public:
  MixtureModel(std::vector<double> y, std::size_t components, MixturePrior prior = {});

  std::string family() const override { return "mixture"; }
  std::size_t n_units() const override { return y_.size(); }
  std::vector<std::string> theta_names() const override;

  std::unique_ptr<ChainKernel> make_kernel(std::optional<std::size_t> holdout,
                                           prob::RngStream& init_rng) const override;

  double unit_logpred(std::size_t i, Row row, double latent) const override;
  double regen_latent(std::size_t i, Row row, prob::RngStream& rng) const override;
  bool latent_atoms(std::size_t i, Row row, std::vector<double>& values,
                    std::vector<double>& log_probs) const override;
  double int_logpred(std::size_t i, Row row, prob::RngStream& rng) const override;
  double midp(std::size_t i, Row row, double latent) const override;

  std::size_t components() const { return k_; }
  const std::vector<double>& data() const { return y_; }
  const MixturePrior& prior() const { return prior_; }

  MixtureParams params(Row row) const;
  // mu of the component unit i is assigned to in this draw.
  double assigned_mean(std::size_t i, Row row) const;

  std::span<const double> mu(Row row) const { return row.subspan(0, k_); }
  std::span<const double> sigma2(Row row) const { return row.subspan(k_, k_); }
  std::span<const double> weights(Row row) const { return row.subspan(2 * k_, k_); }

 private:
  std::vector<double> y_;
  std::size_t k_;
  MixturePrior prior_;
};

}  // namespace cveval::models
