#include "cveval/models/car.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cveval/error.hpp"
#include "cveval/models/adapt.hpp"
#include "cveval/prob/densities.hpp"
#include "cveval/prob/numeric.hpp"
#include "cveval/prob/samplers.hpp"
#include "cveval/prob/special.hpp"

namespace cveval::models {

namespace {

// Q0 v where Q0 = tau2 * precision.
void apply_unscaled_precision(const CarStructure& st, const std::vector<double>& sqrt_e,
                              double phi, bool spatial, std::span<const double> v,
                              std::vector<double>& out) {
  const std::size_t n = st.size();
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!spatial) {
      out[i] = v[i];
      continue;
    }
    double acc = 0.0;
    for (std::size_t j : st.neighbors[i]) acc += sqrt_e[j] * v[j];
    out[i] = st.expected[i] * v[i] - phi * sqrt_e[i] * acc;
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

class CarKernel final : public ChainKernel {
 public:
  CarKernel(const CarModel& model, std::optional<std::size_t> holdout, prob::RngStream& rng)
      : st_(model.structure()),
        prior_(model.prior()),
        y_(model.counts()),
        holdout_(holdout),
        covariate_(has_covariate(model.variant())),
        spatial_(is_spatial(model.variant())),
        support_(model.support()),
        s_(st_.size()),
        site_scale_(st_.size(), RandomWalkScale(0.3)),
        phi_scale_(0.05) {
    const std::size_t n = st_.size();
    sqrt_e_.resize(n);
    for (std::size_t i = 0; i < n; ++i) sqrt_e_[i] = std::sqrt(st_.expected[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (holdout_ && *holdout_ == i) continue;
      s_[i] = std::log((static_cast<double>(y_[i]) + 0.5) / st_.expected[i]) + 0.1 * rng.normal();
      total += s_[i];
    }
    // The held-out site starts from the others, never from its own count.
    if (holdout_) s_[*holdout_] = total / static_cast<double>(std::max<std::size_t>(n - 1, 1));
    params_.alpha = prob::mean(s_);
    params_.beta = 0.0;
    params_.tau2 = std::max(prob::sample_variance(s_), 0.05);
    params_.phi = 0.0;
  }

  void sweep(prob::RngStream& rng) override {
    update_sites(rng);
    update_coefficients(rng);
    update_tau2(rng);
    if (spatial_) update_phi(rng);
  }

  void set_adapting(bool on) override {
    for (auto& sc : site_scale_) sc.set_adapting(on);
    phi_scale_.set_adapting(on);
  }

  void write_draw(std::span<double> out) const override {
    std::size_t k = 0;
    out[k++] = params_.alpha;
    if (covariate_) out[k++] = params_.beta;
    out[k++] = params_.tau2;
    if (spatial_) out[k++] = params_.phi;
    std::copy(s_.begin(), s_.end(), out.begin() + static_cast<std::ptrdiff_t>(k));
  }

  void load_draw(std::span<const double> row) override {
    std::size_t k = 0;
    params_.alpha = row[k++];
    params_.beta = covariate_ ? row[k++] : 0.0;
    params_.tau2 = row[k++];
    params_.phi = spatial_ ? row[k++] : 0.0;
    std::copy(row.begin() + static_cast<std::ptrdiff_t>(k), row.end(), s_.begin());
  }

  std::vector<std::pair<std::string, double>> acceptance_rates() const override {
    std::vector<double> rates;
    for (std::size_t i = 0; i < site_scale_.size(); ++i)
      if (!(holdout_ && *holdout_ == i)) rates.push_back(site_scale_[i].acceptance_rate());
    std::vector<std::pair<std::string, double>> out{{"s(mean)", prob::mean(rates)}};
    if (spatial_) out.emplace_back("phi", phi_scale_.acceptance_rate());
    return out;
  }

 private:
  void update_sites(prob::RngStream& rng) {
    for (std::size_t i = 0; i < s_.size(); ++i) {
      const auto cond = car_conditional(i, s_, params_, st_, spatial_);
      if (holdout_ && *holdout_ == i) {
        s_[i] = prob::draw_normal(rng, cond.mean, std::sqrt(cond.variance));
        continue;
      }
      const double yi = static_cast<double>(y_[i]);
      const double ei = st_.expected[i];
      auto log_target = [&](double s) {
        const double d = s - cond.mean;
        return yi * s - ei * std::exp(s) - 0.5 * d * d / cond.variance;
      };
      auto& scale = site_scale_[i];
      const double proposal = s_[i] + scale.scale() * rng.normal();
      const bool accept = std::log(rng.uniform()) < log_target(proposal) - log_target(s_[i]);
      if (accept) s_[i] = proposal;
      scale.record(accept);
    }
  }

  void update_coefficients(prob::RngStream& rng) {
    const std::size_t n = s_.size();
    const double inv_tau2 = 1.0 / params_.tau2;
    std::vector<double> ones(n, 1.0);
    apply_unscaled_precision(st_, sqrt_e_, params_.phi, spatial_, ones, q_ones_);
    if (!covariate_) {
      const double prec = dot(ones, q_ones_) * inv_tau2 + 1.0 / prior_.coef_variance;
      const double mean = dot(q_ones_, s_) * inv_tau2 / prec;
      params_.alpha = prob::draw_normal(rng, mean, 1.0 / std::sqrt(prec));
      return;
    }
    apply_unscaled_precision(st_, sqrt_e_, params_.phi, spatial_, st_.covariate, q_x_);
    const double p11 = dot(ones, q_ones_) * inv_tau2 + 1.0 / prior_.coef_variance;
    const double p12 = dot(st_.covariate, q_ones_) * inv_tau2;
    const double p22 = dot(st_.covariate, q_x_) * inv_tau2 + 1.0 / prior_.coef_variance;
    const double b1 = dot(q_ones_, s_) * inv_tau2;
    const double b2 = dot(q_x_, s_) * inv_tau2;
    const double det = p11 * p22 - p12 * p12;
    const double m1 = (p22 * b1 - p12 * b2) / det;
    const double m2 = (p11 * b2 - p12 * b1) / det;
    // P = L L^T; draw = mean + L^-T z.
    const double l11 = std::sqrt(p11);
    const double l21 = p12 / l11;
    const double l22 = std::sqrt(p22 - l21 * l21);
    const double z1 = rng.normal();
    const double z2 = rng.normal();
    const double u2 = z2 / l22;
    const double u1 = (z1 - l21 * u2) / l11;
    params_.alpha = m1 + u1;
    params_.beta = m2 + u2;
  }

  void residuals(std::vector<double>& r) const {
    r.resize(s_.size());
    for (std::size_t i = 0; i < s_.size(); ++i)
      r[i] = s_[i] - params_.alpha - (covariate_ ? st_.covariate[i] * params_.beta : 0.0);
  }

  void update_tau2(prob::RngStream& rng) {
    residuals(r_);
    apply_unscaled_precision(st_, sqrt_e_, params_.phi, spatial_, r_, q_r_);
    const double quad = dot(r_, q_r_);
    params_.tau2 = prob::draw_inverse_gamma(rng, prior_.tau_shape + 0.5 * static_cast<double>(s_.size()),
                                            prior_.tau_scale + 0.5 * quad);
  }

  void update_phi(prob::RngStream& rng) {
    residuals(r_);
    double cross = 0.0;
    for (std::size_t i = 0; i < s_.size(); ++i)
      for (std::size_t j : st_.neighbors[i]) cross += sqrt_e_[i] * sqrt_e_[j] * r_[i] * r_[j];
    const double half_cross = 0.5 * cross / params_.tau2;
    auto log_target = [&](double phi) {
      double acc = 0.0;
      for (double lambda : st_.adjacency_eigenvalues) acc += std::log1p(-phi * lambda);
      return 0.5 * acc + phi * half_cross;
    };
    const double proposal = params_.phi + phi_scale_.scale() * rng.normal();
    bool accept = false;
    if (proposal > support_.first && proposal < support_.second)
      accept = std::log(rng.uniform()) < log_target(proposal) - log_target(params_.phi);
    if (accept) params_.phi = proposal;
    phi_scale_.record(accept);
  }

  const CarStructure& st_;
  CarPrior prior_;
  const std::vector<std::int64_t>& y_;
  std::optional<std::size_t> holdout_;
  bool covariate_;
  bool spatial_;
  std::pair<double, double> support_;
  CarParams params_;
  std::vector<double> s_;
  std::vector<double> sqrt_e_;
  std::vector<RandomWalkScale> site_scale_;
  RandomWalkScale phi_scale_;
  std::vector<double> q_ones_, q_x_, r_, q_r_;
};

}  // namespace

std::string to_string(CarVariant variant) {
  switch (variant) {
    case CarVariant::SpatialLinear: return "spatial+linear";
    case CarVariant::Spatial: return "spatial";
    case CarVariant::Linear: return "linear";
    case CarVariant::Exchangeable: return "exchangeable";
  }
  return "unknown";
}

CarVariant parse_car_variant(const std::string& name) {
  if (name == "spatial+linear" || name == "full") return CarVariant::SpatialLinear;
  if (name == "spatial") return CarVariant::Spatial;
  if (name == "linear") return CarVariant::Linear;
  if (name == "exchangeable") return CarVariant::Exchangeable;
  throw ConfigurationError("unknown CAR variant '" + name + "'");
}

bool has_covariate(CarVariant v) {
  return v == CarVariant::SpatialLinear || v == CarVariant::Linear;
}

bool is_spatial(CarVariant v) {
  return v == CarVariant::SpatialLinear || v == CarVariant::Spatial;
}

CarStructure CarStructure::build(std::vector<double> expected, std::vector<double> covariate,
                                 std::vector<std::vector<std::size_t>> neighbors) {
  const std::size_t n = expected.size();
  if (n == 0) throw ArgumentError("car structure: no sites");
  if (covariate.size() != n || neighbors.size() != n)
    throw ArgumentError("car structure: inconsistent sizes");
  CarStructure st;
  st.expected = std::move(expected);
  st.covariate = std::move(covariate);
  st.neighbors = std::move(neighbors);
  st.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(st.expected[i] > 0.0)) throw ArgumentError("car structure: expected counts must be positive");
    for (std::size_t j : st.neighbors[i]) {
      if (j >= n || j == i) throw ArgumentError("car structure: bad neighbor index");
      const auto& back = st.neighbors[j];
      if (std::find(back.begin(), back.end(), i) == back.end())
        throw ArgumentError("car structure: adjacency is not symmetric");
      st.weights[i].push_back(std::sqrt(st.expected[j] / st.expected[i]));
    }
  }
  st.adjacency_eigenvalues = prob::sym_eigenvalues(st.adjacency());
  return st;
}

CarStructure CarStructure::build(const LipCancerData& data) {
  return build(data.expected, data.covariate, data.neighbors);
}

bool CarStructure::has_edges() const {
  return std::any_of(neighbors.begin(), neighbors.end(), [](const auto& v) { return !v.empty(); });
}

prob::SymMatrix CarStructure::adjacency() const {
  prob::SymMatrix a(size());
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j : neighbors[i]) a.at(i, j) = 1.0;
  return a;
}

std::pair<double, double> phi_support(const CarStructure& structure, double unbounded) {
  if (!structure.has_edges()) return {-unbounded, unbounded};
  const auto& eig = structure.adjacency_eigenvalues;
  return {1.0 / eig.front(), 1.0 / eig.back()};
}

NormalMoments car_conditional(std::size_t i, std::span<const double> s, const CarParams& params,
                              const CarStructure& st, bool spatial) {
  const double own = params.alpha + st.covariate[i] * params.beta;
  if (!spatial) return {own, params.tau2};
  double acc = 0.0;
  const auto& nb = st.neighbors[i];
  for (std::size_t k = 0; k < nb.size(); ++k) {
    const std::size_t j = nb[k];
    acc += st.weights[i][k] * (s[j] - params.alpha - st.covariate[j] * params.beta);
  }
  return {own + params.phi * acc, params.tau2 / st.expected[i]};
}

prob::SymMatrix car_precision(const CarParams& params, const CarStructure& st, bool spatial) {
  const std::size_t n = st.size();
  prob::SymMatrix q(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!spatial) {
      q.at(i, i) = 1.0 / params.tau2;
      continue;
    }
    q.at(i, i) = st.expected[i] / params.tau2;
    for (std::size_t j : st.neighbors[i])
      q.at(i, j) = -params.phi * std::sqrt(st.expected[i] * st.expected[j]) / params.tau2;
  }
  return q;
}

double car_log_joint_prior(std::span<const double> s, const CarParams& params,
                           const CarStructure& st, bool spatial) {
  const std::size_t n = st.size();
  if (s.size() != n) throw ArgumentError("car_log_joint_prior: dimension mismatch");
  if (!(params.tau2 > 0.0)) throw ArgumentError("car_log_joint_prior: tau2 must be positive");
  double log_det = -static_cast<double>(n) * std::log(params.tau2);
  if (spatial) {
    const auto [lo, hi] = phi_support(st);
    if (!(params.phi > lo && params.phi < hi))
      throw ArgumentError("car_log_joint_prior: phi outside the admissible interval");
    for (double lambda : st.adjacency_eigenvalues) log_det += std::log1p(-params.phi * lambda);
    for (double e : st.expected) log_det += std::log(e);
  }
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - params.alpha - st.covariate[i] * params.beta;
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!spatial) {
      quad += r[i] * r[i];
      continue;
    }
    double acc = 0.0;
    for (std::size_t j : st.neighbors[i]) acc += std::sqrt(st.expected[j]) * r[j];
    quad += r[i] * (st.expected[i] * r[i] - params.phi * std::sqrt(st.expected[i]) * acc);
  }
  quad /= params.tau2;
  return -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + 0.5 * log_det -
         0.5 * quad;
}

CarModel::CarModel(const LipCancerData& data, CarVariant variant, std::size_t integration_draws,
                   CarPrior prior)
    : LatentModel(2 + (has_covariate(variant) ? 1 : 0) + (is_spatial(variant) ? 1 : 0)),
      y_(data.y),
      variant_(variant),
      structure_(CarStructure::build(data)),
      support_(phi_support(structure_)),
      draws_(integration_draws),
      prior_(prior) {
  if (y_.size() != structure_.size()) throw ConfigurationError("car: count vector size mismatch");
  if (draws_ == 0) throw ConfigurationError("car: integration draws must be positive");
}

std::vector<std::string> CarModel::theta_names() const {
  std::vector<std::string> names{"alpha"};
  if (has_covariate(variant_)) names.push_back("beta");
  names.push_back("tau2");
  if (is_spatial(variant_)) names.push_back("phi");
  return names;
}

std::unique_ptr<ChainKernel> CarModel::make_kernel(std::optional<std::size_t> holdout,
                                                   prob::RngStream& init_rng) const {
  if (holdout && *holdout >= y_.size()) throw ArgumentError("car: holdout index out of range");
  return std::make_unique<CarKernel>(*this, holdout, init_rng);
}

CarParams CarModel::params(Row row) const {
  CarParams p;
  std::size_t k = 0;
  p.alpha = row[k++];
  if (has_covariate(variant_)) p.beta = row[k++];
  p.tau2 = row[k++];
  if (is_spatial(variant_)) p.phi = row[k++];
  return p;
}

NormalMoments CarModel::conditional(std::size_t i, Row row) const {
  return car_conditional(i, row.subspan(n_theta()), params(row), structure_, is_spatial(variant_));
}

double CarModel::unit_logpred(std::size_t i, Row, double latent) const {
  return prob::poisson_logpmf(y_[i], structure_.expected[i] * std::exp(latent));
}

double CarModel::regen_latent(std::size_t i, Row row, prob::RngStream& rng) const {
  const auto cond = conditional(i, row);
  return prob::draw_normal(rng, cond.mean, std::sqrt(cond.variance));
}

double CarModel::int_logpred(std::size_t i, Row row, prob::RngStream& rng) const {
  // Same draws regen_latent would produce from this stream.
  const auto cond = conditional(i, row);
  const double sd = std::sqrt(cond.variance);
  std::vector<double> terms(draws_);
  for (auto& t : terms) t = unit_logpred(i, row, prob::draw_normal(rng, cond.mean, sd));
  return prob::log_mean_exp(terms);
}

double CarModel::midp(std::size_t i, Row, double latent) const {
  return prob::poisson_midp_tail(y_[i], structure_.expected[i] * std::exp(latent));
}

}  // namespace cveval::models
