#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cveval::mcmc {

// Retained draws, one row per draw laid out as [theta..., latent_1..latent_n].
// Rows are ordered chain-major: draw s belongs to chain s / per_chain.
//
// A store may also carry per-draw log weights; evaluators then treat it as a
// weighted sample (used to feed an exact enumeration through the same code).
class SampleStore {
 public:
  SampleStore() = default;
  SampleStore(std::vector<std::string> theta_names, std::size_t n_units, std::size_t n_chains,
              std::size_t per_chain);

  static SampleStore weighted(std::vector<std::string> theta_names, std::size_t n_units,
                              const std::vector<std::vector<double>>& rows,
                              std::vector<double> log_weights);

  std::size_t size() const { return n_chains_ * per_chain_; }
  bool empty() const { return size() == 0; }
  std::size_t n_chains() const { return n_chains_; }
  std::size_t per_chain() const { return per_chain_; }
  std::size_t n_theta() const { return theta_names_.size(); }
  std::size_t n_units() const { return n_units_; }
  std::size_t width() const { return n_theta() + n_units_; }
  const std::vector<std::string>& theta_names() const { return theta_names_; }

  std::span<const double> row(std::size_t s) const {
    return {data_.data() + s * width(), width()};
  }
  std::span<double> row(std::size_t chain, std::size_t iteration) {
    return {data_.data() + (chain * per_chain_ + iteration) * width(), width()};
  }
  std::size_t chain_of(std::size_t s) const { return s / per_chain_; }

  double theta(std::size_t s, std::size_t k) const { return data_[s * width() + k]; }
  double latent(std::size_t s, std::size_t i) const { return data_[s * width() + n_theta() + i]; }

  // Values of one column across all draws.
  std::vector<double> column(std::size_t c) const;
  std::size_t column_index(const std::string& theta_name) const;

  bool is_weighted() const { return !log_weights_.empty(); }
  std::span<const double> log_weights() const { return log_weights_; }
  // One finite-or-(-inf) log weight per draw; an empty vector clears them.
  void set_log_weights(std::vector<double> log_weights);

  const std::vector<double>& raw() const { return data_; }
  std::vector<double>& raw() { return data_; }

  bool operator==(const SampleStore& other) const = default;

 private:
  std::vector<std::string> theta_names_;
  std::size_t n_units_ = 0;
  std::size_t n_chains_ = 0;
  std::size_t per_chain_ = 0;
  std::vector<double> data_;
  std::vector<double> log_weights_;
};

}  // namespace cveval::mcmc
