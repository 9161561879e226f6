#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cveval/prob/rng.hpp"

namespace cveval::models {

// A stored draw is one flat row: the parameter block followed by one latent
// value per unit. Mixture labels are stored as 0-based component indices.
using Row = std::span<const double>;

// One running Markov chain. Owns its state; `sweep` advances it by one full
// scan over all conditionals.
class ChainKernel {
 public:
  virtual ~ChainKernel() = default;

  virtual void sweep(prob::RngStream& rng) = 0;
  // Random-walk scales move only while adapting is on.
  virtual void set_adapting(bool on) = 0;
  virtual void write_draw(std::span<double> out) const = 0;
  // Inverse of write_draw: puts the chain in the given state.
  virtual void load_draw(std::span<const double> row) = 0;
  // Post-adaptation acceptance rate per random-walk block.
  virtual std::vector<std::pair<std::string, double>> acceptance_rates() const { return {}; }
};

class LatentModel {
 public:
  virtual ~LatentModel() = default;

  virtual std::string family() const = 0;
  virtual std::size_t n_units() const = 0;
  virtual std::vector<std::string> theta_names() const = 0;

  std::size_t n_theta() const { return n_theta_; }
  std::size_t row_width() const { return n_theta_ + n_units(); }

  // With `holdout` set, unit i's likelihood factor is dropped and its latent
  // value is refreshed from the conditional prior on every sweep.
  virtual std::unique_ptr<ChainKernel> make_kernel(std::optional<std::size_t> holdout,
                                                   prob::RngStream& init_rng) const = 0;

  // log P(y_i^obs | theta, b_i = latent).
  virtual double unit_logpred(std::size_t i, Row row, double latent) const = 0;

  // Same, at the latent value stored in the row.
  double nonint_logpred(std::size_t i, Row row) const {
    return unit_logpred(i, row, latent(i, row));
  }

  // Draw b_i from P(b_i | b_-i, theta). Never looks at y_i.
  virtual double regen_latent(std::size_t i, Row row, prob::RngStream& rng) const = 0;

  // Exact discrete conditional prior of b_i, when the latent is discrete:
  // support points and their log probabilities. Returns false otherwise.
  virtual bool latent_atoms(std::size_t i, Row row, std::vector<double>& values,
                            std::vector<double>& log_probs) const {
    (void)i;
    (void)row;
    (void)values;
    (void)log_probs;
    return false;
  }

  // log P(y_i^obs | theta, b_-i). Exact over the atoms when they exist,
  // otherwise the log of an R-draw Monte Carlo average over regen_latent.
  virtual double int_logpred(std::size_t i, Row row, prob::RngStream& rng) const;

  // Number of Monte Carlo draws used by int_logpred when not exact.
  virtual std::size_t integration_draws() const { return 0; }

  // Pr(Y_i > y_i^obs) + 0.5 Pr(Y_i = y_i^obs) given (theta, b_i = latent).
  virtual double midp(std::size_t i, Row row, double latent) const;

  double latent(std::size_t i, Row row) const { return row[n_theta_ + i]; }

 protected:
  explicit LatentModel(std::size_t n_theta) : n_theta_(n_theta) {}

 private:
  std::size_t n_theta_;
};

}  // namespace cveval::models
