#include "cveval/models/seeds.hpp"

#include <cmath>
#include <string>

#include "cveval/error.hpp"
#include "cveval/models/adapt.hpp"
#include "cveval/prob/densities.hpp"
#include "cveval/prob/samplers.hpp"
#include "cveval/prob/special.hpp"

namespace cveval::models {

namespace {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

int design(const SeedsData& d, std::size_t i, std::size_t k) {
  switch (k) {
    case 0: return 1;
    case 1: return d.x1[i];
    case 2: return d.x2[i];
    default: return d.x1[i] * d.x2[i];
  }
}

class SeedsKernel final : public ChainKernel {
 public:
  SeedsKernel(const SeedsModel& model, std::optional<std::size_t> holdout, prob::RngStream& rng)
      : model_(model),
        data_(model.data()),
        holdout_(holdout),
        b_(data_.size(), 0.0),
        eta_(data_.size()),
        coef_scale_(SeedsModel::kCoefficients, RandomWalkScale(0.3)),
        b_scale_(data_.size(), RandomWalkScale(0.3)) {
    for (auto& a : alpha_) a = 0.1 * rng.normal();
    sigma2_ = 0.1;
    refresh_eta();
  }

  void sweep(prob::RngStream& rng) override {
    for (std::size_t k = 0; k < SeedsModel::kCoefficients; ++k) update_coefficient(k, rng);
    update_effects(rng);
    const auto [shape, scale] = seeds_sigma2_conditional(b_, model_.prior());
    sigma2_ = prob::draw_inverse_gamma(rng, shape, scale);
  }

  void set_adapting(bool on) override {
    for (auto& s : coef_scale_) s.set_adapting(on);
    for (auto& s : b_scale_) s.set_adapting(on);
  }

  void write_draw(std::span<double> out) const override {
    for (std::size_t k = 0; k < SeedsModel::kCoefficients; ++k) out[k] = alpha_[k];
    out[SeedsModel::kCoefficients] = sigma2_;
    for (std::size_t i = 0; i < b_.size(); ++i) out[SeedsModel::kCoefficients + 1 + i] = b_[i];
  }

  void load_draw(std::span<const double> row) override {
    for (std::size_t k = 0; k < SeedsModel::kCoefficients; ++k) alpha_[k] = row[k];
    sigma2_ = row[SeedsModel::kCoefficients];
    for (std::size_t i = 0; i < b_.size(); ++i) b_[i] = row[SeedsModel::kCoefficients + 1 + i];
    refresh_eta();
  }

  std::vector<std::pair<std::string, double>> acceptance_rates() const override {
    const auto names = model_.theta_names();
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t k = 0; k < SeedsModel::kCoefficients; ++k)
      out.emplace_back(names[k], coef_scale_[k].acceptance_rate());
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < b_.size(); ++i) {
      if (holdout_ && *holdout_ == i) continue;
      acc += b_scale_[i].acceptance_rate();
      ++count;
    }
    out.emplace_back("b(mean)", count ? acc / static_cast<double>(count) : 0.0);
    return out;
  }

 private:
  bool observed(std::size_t i) const { return !(holdout_ && *holdout_ == i); }

  double plate_loglik(std::size_t i, double eta) const {
    return static_cast<double>(data_.r[i]) * eta - static_cast<double>(data_.n[i]) * softplus(eta);
  }

  void refresh_eta() {
    for (std::size_t i = 0; i < b_.size(); ++i) eta_[i] = model_.fixed_effect(i, alpha_) + b_[i];
  }

  void update_coefficient(std::size_t k, prob::RngStream& rng) {
    auto& scale = coef_scale_[k];
    const double delta = scale.scale() * rng.normal();
    const double proposal = alpha_[k] + delta;
    double diff =
        0.5 * (alpha_[k] * alpha_[k] - proposal * proposal) / model_.prior().coef_variance;
    for (std::size_t i = 0; i < b_.size(); ++i) {
      if (!observed(i) || design(data_, i, k) == 0) continue;
      diff += plate_loglik(i, eta_[i] + delta) - plate_loglik(i, eta_[i]);
    }
    const bool accept = std::log(rng.uniform()) < diff;
    if (accept) {
      alpha_[k] = proposal;
      for (std::size_t i = 0; i < b_.size(); ++i)
        if (design(data_, i, k) != 0) eta_[i] += delta;
    }
    scale.record(accept);
  }

  void update_effects(prob::RngStream& rng) {
    const double sd = std::sqrt(sigma2_);
    for (std::size_t i = 0; i < b_.size(); ++i) {
      if (!observed(i)) {
        const double fresh = prob::draw_normal(rng, 0.0, sd);
        eta_[i] += fresh - b_[i];
        b_[i] = fresh;
        continue;
      }
      auto& scale = b_scale_[i];
      const double delta = scale.scale() * rng.normal();
      const double proposal = b_[i] + delta;
      const double diff = plate_loglik(i, eta_[i] + delta) - plate_loglik(i, eta_[i]) +
                          0.5 * (b_[i] * b_[i] - proposal * proposal) / sigma2_;
      const bool accept = std::log(rng.uniform()) < diff;
      if (accept) {
        b_[i] = proposal;
        eta_[i] += delta;
      }
      scale.record(accept);
    }
    // Keep the cached predictor from drifting through repeated increments.
    refresh_eta();
  }

  const SeedsModel& model_;
  const SeedsData& data_;
  std::optional<std::size_t> holdout_;
  std::array<double, SeedsModel::kCoefficients> alpha_{};
  double sigma2_ = 0.1;
  std::vector<double> b_;
  std::vector<double> eta_;
  std::vector<RandomWalkScale> coef_scale_;
  std::vector<RandomWalkScale> b_scale_;
};

}  // namespace

std::pair<double, double> seeds_sigma2_conditional(std::span<const double> b,
                                                   const SeedsPrior& prior) {
  double ss = 0.0;
  for (double v : b) ss += v * v;
  return {prior.sigma_shape + 0.5 * static_cast<double>(b.size()), prior.sigma_scale + 0.5 * ss};
}

SeedsModel::SeedsModel(SeedsData data, std::size_t integration_draws, SeedsPrior prior)
    : LatentModel(kCoefficients + 1),
      data_(std::move(data)),
      draws_(integration_draws),
      prior_(prior) {
  const std::size_t n = data_.size();
  if (n == 0) throw ConfigurationError("seeds: no plates");
  if (data_.n.size() != n || data_.x1.size() != n || data_.x2.size() != n)
    throw ConfigurationError("seeds: inconsistent column lengths");
  for (std::size_t i = 0; i < n; ++i)
    if (data_.r[i] < 0 || data_.r[i] > data_.n[i])
      throw ConfigurationError("seeds: plate " + std::to_string(i + 1) + " has r outside [0, n]");
  if (draws_ == 0) throw ConfigurationError("seeds: integration draws must be positive");
}

std::vector<std::string> SeedsModel::theta_names() const {
  return {"alpha0", "alpha1", "alpha2", "alpha12", "sigma2"};
}

std::unique_ptr<ChainKernel> SeedsModel::make_kernel(std::optional<std::size_t> holdout,
                                                     prob::RngStream& init_rng) const {
  if (holdout && *holdout >= data_.size()) throw ArgumentError("seeds: holdout index out of range");
  return std::make_unique<SeedsKernel>(*this, holdout, init_rng);
}

double SeedsModel::fixed_effect(std::size_t i, std::span<const double> c) const {
  return c[0] + c[1] * data_.x1[i] + c[2] * data_.x2[i] + c[3] * data_.x1[i] * data_.x2[i];
}

double SeedsModel::success_probability(std::size_t i, Row row, double latent) const {
  return logistic(fixed_effect(i, row) + latent);
}

double SeedsModel::unit_logpred(std::size_t i, Row row, double latent) const {
  return prob::binomial_logpmf(data_.r[i], data_.n[i], success_probability(i, row, latent));
}

double SeedsModel::regen_latent(std::size_t, Row row, prob::RngStream& rng) const {
  return prob::draw_normal(rng, 0.0, std::sqrt(row[kCoefficients]));
}

double SeedsModel::midp(std::size_t i, Row row, double latent) const {
  return prob::binomial_midp_tail(data_.r[i], data_.n[i], success_probability(i, row, latent));
}

SeedsData SeedsModel::simulate(const SeedsData& design, std::span<const double> theta,
                               prob::RngStream& rng) {
  if (theta.size() != kCoefficients + 1 || !(theta[kCoefficients] >= 0.0))
    throw ArgumentError("seeds simulate: expected (a0, a1, a2, a12, sigma2)");
  SeedsData out = design;
  const double sd = std::sqrt(theta[kCoefficients]);
  for (std::size_t i = 0; i < design.size(); ++i) {
    const double eta = theta[0] + theta[1] * design.x1[i] + theta[2] * design.x2[i] +
                       theta[3] * design.x1[i] * design.x2[i] + sd * rng.normal();
    out.r[i] = prob::draw_binomial(rng, design.n[i], logistic(eta));
  }
  return out;
}

}  // namespace cveval::models
