#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cveval/models/latent_model.hpp"

namespace cveval::models {

// Small models with closed-form or enumerable answers, used to check the
// samplers and the evaluators.

// theta takes one of three atoms. Given the atom, b_i is Bernoulli(q) and
// y_i ~ Poisson(rate[b_i]).
class DiscreteToyModel : public LatentModel {
 public:
  struct Atom {
    double prior;
    double q;
    std::array<double, 2> rate;
  };

  DiscreteToyModel(std::vector<std::int64_t> y, std::array<Atom, 3> atoms);

  // Four units and three well-separated atoms.
  static DiscreteToyModel standard();

  std::string family() const override { return "discrete-toy"; }
  std::size_t n_units() const override { return y_.size(); }
  std::vector<std::string> theta_names() const override { return {"atom"}; }

  std::unique_ptr<ChainKernel> make_kernel(std::optional<std::size_t> holdout,
                                           prob::RngStream& init_rng) const override;

  double unit_logpred(std::size_t i, Row row, double latent) const override;
  double regen_latent(std::size_t i, Row row, prob::RngStream& rng) const override;
  bool latent_atoms(std::size_t i, Row row, std::vector<double>& values,
                    std::vector<double>& log_probs) const override;
  double midp(std::size_t i, Row row, double latent) const override;

  const std::vector<std::int64_t>& data() const { return y_; }
  const std::array<Atom, 3>& atoms() const { return atoms_; }

 private:
  std::vector<std::int64_t> y_;
  std::array<Atom, 3> atoms_;
};

// mu ~ N(0, prior_var), b_i ~ N(mu, tau2), y_i ~ N(b_i, 1). With tau2 = 0
// the latent collapses onto mu and the model has no unit-level latent.
class NormalToyModel : public LatentModel {
 public:
  NormalToyModel(std::vector<double> y, double tau2, double prior_var = 100.0);

  std::string family() const override { return "normal-toy"; }
  std::size_t n_units() const override { return y_.size(); }
  std::vector<std::string> theta_names() const override { return {"mu"}; }

  std::unique_ptr<ChainKernel> make_kernel(std::optional<std::size_t> holdout,
                                           prob::RngStream& init_rng) const override;

  double unit_logpred(std::size_t i, Row row, double latent) const override;
  double regen_latent(std::size_t i, Row row, prob::RngStream& rng) const override;
  double int_logpred(std::size_t i, Row row, prob::RngStream& rng) const override;
  double midp(std::size_t i, Row row, double latent) const override;

  const std::vector<double>& data() const { return y_; }
  double tau2() const { return tau2_; }
  double prior_var() const { return prior_var_; }

 private:
  std::vector<double> y_;
  double tau2_;
  double prior_var_;
};

}  // namespace cveval::models
