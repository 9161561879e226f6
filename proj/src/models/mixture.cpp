#include "cveval/models/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cveval/error.hpp"
#include "cveval/prob/densities.hpp"
#include "cveval/prob/numeric.hpp"
#include "cveval/prob/samplers.hpp"
#include "cveval/prob/special.hpp"

namespace cveval::models {

namespace {

constexpr int kOccupancyAttempts = 100;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

class MixtureKernel final : public ChainKernel {
 public:
  MixtureKernel(const MixtureModel& model, std::optional<std::size_t> holdout,
                prob::RngStream& rng)
      : model_(model),
        y_(model.data()),
        k_(model.components()),
        holdout_(holdout),
        mu_(k_),
        sigma2_(k_),
        p_(k_, 1.0 / static_cast<double>(k_)),
        z_(y_.size()),
        proposal_(y_.size()),
        log_w_(k_),
        log_norm_(k_),
        half_prec_(k_) {
    std::vector<double> seen;
    for (std::size_t i = 0; i < y_.size(); ++i)
      if (!(holdout_ && *holdout_ == i)) seen.push_back(y_[i]);
    const double var = seen.size() > 1 ? prob::sample_variance(seen) : 1.0;
    const double centre = prob::mean(seen);
    for (std::size_t k = 0; k < k_; ++k) {
      sigma2_[k] = var;
      mu_[k] = centre;
    }
    // Random labels, then force each component to own at least one observed point.
    for (auto& z : z_) z = static_cast<std::size_t>(rng() % k_);
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < y_.size(); ++i)
      if (!(holdout_ && *holdout_ == i)) order.push_back(i);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    for (std::size_t k = 0; k < k_; ++k) z_[order[k]] = k;
  }

  void sweep(prob::RngStream& rng) override {
    update_components(rng);
    update_labels(rng);
  }

  void set_adapting(bool) override {}

  void write_draw(std::span<double> out) const override {
    for (std::size_t k = 0; k < k_; ++k) {
      out[k] = mu_[k];
      out[k_ + k] = sigma2_[k];
      out[2 * k_ + k] = p_[k];
    }
    for (std::size_t i = 0; i < z_.size(); ++i) out[3 * k_ + i] = static_cast<double>(z_[i]);
  }

  void load_draw(std::span<const double> row) override {
    for (std::size_t k = 0; k < k_; ++k) {
      mu_[k] = row[k];
      sigma2_[k] = row[k_ + k];
      p_[k] = row[2 * k_ + k];
    }
    for (std::size_t i = 0; i < z_.size(); ++i) z_[i] = static_cast<std::size_t>(row[3 * k_ + i]);
  }

 private:
  void update_components(prob::RngStream& rng) {
    const auto& prior = model_.prior();
    std::vector<double> count(k_, 0.0), sum(k_, 0.0), all(k_, 1.0);
    for (std::size_t i = 0; i < y_.size(); ++i) {
      all[z_[i]] += 1.0;
      if (holdout_ && *holdout_ == i) continue;
      count[z_[i]] += 1.0;
      sum[z_[i]] += y_[i];
    }
    for (std::size_t k = 0; k < k_; ++k) {
      const double prec = 1.0 / prior.variance + count[k] / sigma2_[k];
      const double mean = (prior.mean / prior.variance + sum[k] / sigma2_[k]) / prec;
      mu_[k] = prob::draw_normal(rng, mean, 1.0 / std::sqrt(prec));
    }
    std::vector<double> ss(k_, 0.0);
    for (std::size_t i = 0; i < y_.size(); ++i) {
      if (holdout_ && *holdout_ == i) continue;
      const double d = y_[i] - mu_[z_[i]];
      ss[z_[i]] += d * d;
    }
    for (std::size_t k = 0; k < k_; ++k)
      sigma2_[k] = prob::draw_inverse_gamma(rng, prior.shape + 0.5 * count[k],
                                            prior.scale + 0.5 * ss[k]);
    p_ = prob::draw_dirichlet(rng, all);
  }

  void update_labels(prob::RngStream& rng) {
    for (std::size_t k = 0; k < k_; ++k) {
      log_norm_[k] = std::log(p_[k]) - kLogSqrt2Pi - 0.5 * std::log(sigma2_[k]);
      half_prec_[k] = 0.5 / sigma2_[k];
    }
    std::vector<std::size_t> occupancy(k_);
    for (int attempt = 0; attempt < kOccupancyAttempts; ++attempt) {
      std::fill(occupancy.begin(), occupancy.end(), 0);
      for (std::size_t i = 0; i < y_.size(); ++i) {
        if (holdout_ && *holdout_ == i) {
          // Drawn from its prior and not counted: only observed points
          // keep a component alive.
          proposal_[i] = prob::draw_categorical(rng, p_);
          continue;
        } else {
          double hi = -std::numeric_limits<double>::infinity();
          for (std::size_t k = 0; k < k_; ++k) {
            const double d = y_[i] - mu_[k];
            log_w_[k] = log_norm_[k] - d * d * half_prec_[k];
            hi = std::max(hi, log_w_[k]);
          }
          for (auto& w : log_w_) w = std::exp(w - hi);
          proposal_[i] = prob::draw_categorical(rng, log_w_);
        }
        ++occupancy[proposal_[i]];
      }
      if (std::find(occupancy.begin(), occupancy.end(), 0u) == occupancy.end()) {
        z_.swap(proposal_);
        return;
      }
    }
  }

  const MixtureModel& model_;
  const std::vector<double>& y_;
  std::size_t k_;
  std::optional<std::size_t> holdout_;
  std::vector<double> mu_, sigma2_, p_;
  std::vector<std::size_t> z_, proposal_;
  std::vector<double> log_w_, log_norm_, half_prec_;
};

}  // namespace

MixturePrior MixturePrior::from_data(std::span<const double> y) {
  MixturePrior prior;
  prior.mean = prob::mean(y);
  prior.scale = 0.01 * prob::sample_variance(y);
  return prior;
}

double mixture_nonint_logpred(double y, std::span<const double> mu,
                              std::span<const double> sigma2, std::size_t z) {
  if (z >= mu.size()) throw ArgumentError("mixture_nonint_logpred: label out of range");
  return prob::normal_logpdf(y, mu[z], std::sqrt(sigma2[z]));
}

double mixture_int_logpred(double y, std::span<const double> mu, std::span<const double> sigma2,
                           std::span<const double> p) {
  std::vector<double> terms(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k)
    terms[k] = std::log(p[k]) + prob::normal_logpdf(y, mu[k], std::sqrt(sigma2[k]));
  return prob::log_sum_exp(terms);
}

std::vector<double> mixture_label_probs(double y, const MixtureParams& params) {
  const std::size_t k = params.mu.size();
  std::vector<double> terms(k);
  for (std::size_t j = 0; j < k; ++j)
    terms[j] = std::log(params.p[j]) + prob::normal_logpdf(y, params.mu[j], std::sqrt(params.sigma2[j]));
  const double total = prob::log_sum_exp(terms);
  for (auto& t : terms) t = std::exp(t - total);
  return terms;
}

std::vector<double> mixture_simulate(std::size_t n, prob::RngStream& rng) {
  if (n == 0) throw ArgumentError("mixture_simulate: n must be positive");
  static constexpr double kCentres[4] = {-7.0, -2.0, 1.0, 7.0};
  std::vector<double> out(n);
  for (auto& v : out) {
    const auto k = static_cast<std::size_t>(rng() % 4);
    v = prob::draw_normal(rng, kCentres[k], 1.0);
  }
  return out;
}

MixtureModel::MixtureModel(std::vector<double> y, std::size_t components, MixturePrior prior)
    : LatentModel(3 * components), y_(std::move(y)), k_(components), prior_(prior) {
  if (k_ == 0) throw ConfigurationError("mixture: need at least one component");
  if (y_.size() < k_)
    throw ConfigurationError("mixture: " + std::to_string(y_.size()) +
                             " data points cannot occupy " + std::to_string(k_) + " components");
}

std::vector<std::string> MixtureModel::theta_names() const {
  std::vector<std::string> names;
  for (const char* prefix : {"mu", "sigma2_", "p"})
    for (std::size_t k = 1; k <= k_; ++k) names.push_back(prefix + std::to_string(k));
  return names;
}

std::unique_ptr<ChainKernel> MixtureModel::make_kernel(std::optional<std::size_t> holdout,
                                                       prob::RngStream& init_rng) const {
  if (holdout && *holdout >= y_.size()) throw ArgumentError("mixture: holdout index out of range");
  if (holdout && y_.size() - 1 < k_)
    throw ConfigurationError("mixture: " + std::to_string(y_.size() - 1) +
                             " observed points cannot occupy " + std::to_string(k_) + " components");
  return std::make_unique<MixtureKernel>(*this, holdout, init_rng);
}

double MixtureModel::unit_logpred(std::size_t i, Row row, double latent) const {
  return mixture_nonint_logpred(y_[i], mu(row), sigma2(row), static_cast<std::size_t>(latent));
}

double MixtureModel::regen_latent(std::size_t, Row row, prob::RngStream& rng) const {
  return static_cast<double>(prob::draw_categorical(rng, weights(row)));
}

bool MixtureModel::latent_atoms(std::size_t, Row row, std::vector<double>& values,
                                std::vector<double>& log_probs) const {
  const auto p = weights(row);
  values.resize(k_);
  log_probs.resize(k_);
  for (std::size_t k = 0; k < k_; ++k) {
    values[k] = static_cast<double>(k);
    log_probs[k] = std::log(p[k]);
  }
  return true;
}

double MixtureModel::int_logpred(std::size_t i, Row row, prob::RngStream&) const {
  return mixture_int_logpred(y_[i], mu(row), sigma2(row), weights(row));
}

double MixtureModel::midp(std::size_t i, Row row, double latent) const {
  const auto z = static_cast<std::size_t>(latent);
  return prob::normal_sf((y_[i] - mu(row)[z]) / std::sqrt(sigma2(row)[z]));
}

MixtureParams MixtureModel::params(Row row) const {
  MixtureParams out;
  out.mu.assign(mu(row).begin(), mu(row).end());
  out.sigma2.assign(sigma2(row).begin(), sigma2(row).end());
  out.p.assign(weights(row).begin(), weights(row).end());
  return out;
}

double MixtureModel::assigned_mean(std::size_t i, Row row) const {
  return mu(row)[static_cast<std::size_t>(latent(i, row))];
}

}  // namespace cveval::models
