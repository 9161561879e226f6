#include "cveval/models/toy.hpp"

#include <cmath>

#include "cveval/error.hpp"
#include "cveval/prob/densities.hpp"
#include "cveval/prob/numeric.hpp"
#include "cveval/prob/samplers.hpp"
#include "cveval/prob/special.hpp"

namespace cveval::models {

namespace {

class DiscreteToyKernel final : public ChainKernel {
 public:
  DiscreteToyKernel(const DiscreteToyModel& model, std::optional<std::size_t> holdout,
                    prob::RngStream& rng)
      : model_(model), holdout_(holdout), b_(model.n_units()) {
    atom_ = static_cast<std::size_t>(rng() % 3);
    for (auto& b : b_) b = static_cast<int>(rng() % 2);
  }

  void sweep(prob::RngStream& rng) override {
    const auto& atoms = model_.atoms();
    const auto& y = model_.data();
    std::array<double, 3> log_w{};
    for (std::size_t a = 0; a < 3; ++a) {
      double lw = std::log(atoms[a].prior);
      for (std::size_t j = 0; j < y.size(); ++j) {
        lw += std::log(b_[j] ? atoms[a].q : 1.0 - atoms[a].q);
        if (holdout_ && *holdout_ == j) continue;
        lw += prob::poisson_logpmf(y[j], atoms[a].rate[b_[j]]);
      }
      log_w[a] = lw;
    }
    atom_ = prob::draw_categorical_log(rng, log_w);
    const auto& at = atoms[atom_];
    for (std::size_t j = 0; j < y.size(); ++j) {
      std::array<double, 2> w{std::log(1.0 - at.q), std::log(at.q)};
      if (!(holdout_ && *holdout_ == j)) {
        w[0] += prob::poisson_logpmf(y[j], at.rate[0]);
        w[1] += prob::poisson_logpmf(y[j], at.rate[1]);
      }
      b_[j] = static_cast<int>(prob::draw_categorical_log(rng, w));
    }
  }

  void set_adapting(bool) override {}

  void write_draw(std::span<double> out) const override {
    out[0] = static_cast<double>(atom_);
    for (std::size_t j = 0; j < b_.size(); ++j) out[1 + j] = b_[j];
  }

  void load_draw(std::span<const double> row) override {
    atom_ = static_cast<std::size_t>(row[0]);
    for (std::size_t j = 0; j < b_.size(); ++j) b_[j] = static_cast<int>(row[1 + j]);
  }

 private:
  const DiscreteToyModel& model_;
  std::optional<std::size_t> holdout_;
  std::size_t atom_ = 0;
  std::vector<int> b_;
};

class NormalToyKernel final : public ChainKernel {
 public:
  NormalToyKernel(const NormalToyModel& model, std::optional<std::size_t> holdout,
                  prob::RngStream& rng)
      : model_(model), holdout_(holdout), b_(model.data()) {
    double sum = 0.0, count = 0.0;
    for (std::size_t j = 0; j < b_.size(); ++j) {
      if (holdout_ && *holdout_ == j) continue;
      sum += b_[j];
      count += 1.0;
    }
    mu_ = (count > 0.0 ? sum / count : 0.0) + rng.normal();
    if (holdout_) b_[*holdout_] = mu_;
    if (model.tau2() == 0.0)
      for (auto& b : b_) b = mu_;
  }

  void sweep(prob::RngStream& rng) override {
    const auto& y = model_.data();
    const double tau2 = model_.tau2();
    const double v0 = model_.prior_var();
    const std::size_t n = y.size();
    if (tau2 == 0.0) {
      double sum = 0.0, count = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (holdout_ && *holdout_ == j) continue;
        sum += y[j];
        count += 1.0;
      }
      const double prec = count + 1.0 / v0;
      mu_ = prob::draw_normal(rng, sum / prec, 1.0 / std::sqrt(prec));
      for (auto& b : b_) b = mu_;
      return;
    }
    double sum_b = 0.0;
    for (double b : b_) sum_b += b;
    const double prec = static_cast<double>(n) / tau2 + 1.0 / v0;
    mu_ = prob::draw_normal(rng, sum_b / tau2 / prec, 1.0 / std::sqrt(prec));
    const double cond_prec = 1.0 / tau2 + 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (holdout_ && *holdout_ == j)
        b_[j] = prob::draw_normal(rng, mu_, std::sqrt(tau2));
      else
        b_[j] = prob::draw_normal(rng, (mu_ / tau2 + y[j]) / cond_prec, 1.0 / std::sqrt(cond_prec));
    }
  }

  void set_adapting(bool) override {}

  void write_draw(std::span<double> out) const override {
    out[0] = mu_;
    for (std::size_t j = 0; j < b_.size(); ++j) out[1 + j] = b_[j];
  }

  void load_draw(std::span<const double> row) override {
    mu_ = row[0];
    for (std::size_t j = 0; j < b_.size(); ++j) b_[j] = row[1 + j];
  }

 private:
  const NormalToyModel& model_;
  std::optional<std::size_t> holdout_;
  double mu_ = 0.0;
  std::vector<double> b_;
};

}  // namespace

DiscreteToyModel::DiscreteToyModel(std::vector<std::int64_t> y, std::array<Atom, 3> atoms)
    : LatentModel(1), y_(std::move(y)), atoms_(atoms) {
  if (y_.empty()) throw ConfigurationError("discrete toy: no data");
  for (const auto& a : atoms_)
    if (!(a.prior > 0.0) || !(a.q > 0.0 && a.q < 1.0) || !(a.rate[0] > 0.0) || !(a.rate[1] > 0.0))
      throw ConfigurationError("discrete toy: invalid atom");
}

DiscreteToyModel DiscreteToyModel::standard() {
  return DiscreteToyModel({0, 3, 7, 2}, {{{0.3, 0.2, {1.0, 5.0}},
                                          {0.5, 0.5, {2.0, 6.0}},
                                          {0.2, 0.7, {0.5, 4.0}}}});
}

std::unique_ptr<ChainKernel> DiscreteToyModel::make_kernel(std::optional<std::size_t> holdout,
                                                           prob::RngStream& init_rng) const {
  return std::make_unique<DiscreteToyKernel>(*this, holdout, init_rng);
}

double DiscreteToyModel::unit_logpred(std::size_t i, Row row, double latent) const {
  const auto& a = atoms_[static_cast<std::size_t>(row[0])];
  return prob::poisson_logpmf(y_[i], a.rate[static_cast<std::size_t>(latent)]);
}

double DiscreteToyModel::regen_latent(std::size_t, Row row, prob::RngStream& rng) const {
  return rng.uniform() < atoms_[static_cast<std::size_t>(row[0])].q ? 1.0 : 0.0;
}

bool DiscreteToyModel::latent_atoms(std::size_t, Row row, std::vector<double>& values,
                                    std::vector<double>& log_probs) const {
  const double q = atoms_[static_cast<std::size_t>(row[0])].q;
  values = {0.0, 1.0};
  log_probs = {std::log1p(-q), std::log(q)};
  return true;
}

double DiscreteToyModel::midp(std::size_t i, Row row, double latent) const {
  const auto& a = atoms_[static_cast<std::size_t>(row[0])];
  return prob::poisson_midp_tail(y_[i], a.rate[static_cast<std::size_t>(latent)]);
}

NormalToyModel::NormalToyModel(std::vector<double> y, double tau2, double prior_var)
    : LatentModel(1), y_(std::move(y)), tau2_(tau2), prior_var_(prior_var) {
  if (y_.empty()) throw ConfigurationError("normal toy: no data");
  if (!(tau2_ >= 0.0) || !(prior_var_ > 0.0)) throw ConfigurationError("normal toy: bad variances");
}

std::unique_ptr<ChainKernel> NormalToyModel::make_kernel(std::optional<std::size_t> holdout,
                                                         prob::RngStream& init_rng) const {
  return std::make_unique<NormalToyKernel>(*this, holdout, init_rng);
}

double NormalToyModel::unit_logpred(std::size_t i, Row, double latent) const {
  return prob::normal_logpdf(y_[i], latent, 1.0);
}

double NormalToyModel::regen_latent(std::size_t, Row row, prob::RngStream& rng) const {
  if (tau2_ == 0.0) return row[0];
  return prob::draw_normal(rng, row[0], std::sqrt(tau2_));
}

double NormalToyModel::int_logpred(std::size_t i, Row row, prob::RngStream&) const {
  return prob::normal_logpdf(y_[i], row[0], std::sqrt(1.0 + tau2_));
}

double NormalToyModel::midp(std::size_t i, Row, double latent) const {
  return prob::normal_sf(y_[i] - latent);
}

}  // namespace cveval::models
