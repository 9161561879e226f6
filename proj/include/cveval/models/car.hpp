#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cveval/models/data.hpp"
#include "cveval/models/latent_model.hpp"
#include "cveval/prob/linalg.hpp"

namespace cveval::models {

enum class CarVariant { SpatialLinear, Spatial, Linear, Exchangeable };

std::string to_string(CarVariant variant);
CarVariant parse_car_variant(const std::string& name);
bool has_covariate(CarVariant variant);
bool is_spatial(CarVariant variant);

// Everything about the areal layout that does not change during sampling.
struct CarStructure {
  std::vector<double> expected;
  std::vector<double> covariate;
  std::vector<std::vector<std::size_t>> neighbors;
  // c_ij = sqrt(E_j / E_i), aligned with `neighbors`.
  std::vector<std::vector<double>> weights;
  // Ascending eigenvalues of the 0/1 adjacency matrix.
  std::vector<double> adjacency_eigenvalues;

  static CarStructure build(std::vector<double> expected, std::vector<double> covariate,
                            std::vector<std::vector<std::size_t>> neighbors);
  static CarStructure build(const LipCancerData& data);

  std::size_t size() const { return expected.size(); }
  bool has_edges() const;
  prob::SymMatrix adjacency() const;
};

// (1/lambda_min, 1/lambda_max) of the adjacency. Without edges every phi is
// admissible and (-unbounded, unbounded) is returned.
std::pair<double, double> phi_support(const CarStructure& structure, double unbounded = 1e6);

// alpha, beta ~ N(0, coef_variance); tau2 ~ IG(tau_shape, tau_scale);
// phi uniform on its admissible interval.
struct CarPrior {
  double coef_variance = 1000.0 * 1000.0;
  double tau_shape = 0.5;
  double tau_scale = 0.0005;
};

struct CarParams {
  double alpha = 0.0;
  double beta = 0.0;
  double tau2 = 1.0;
  double phi = 0.0;
};

struct NormalMoments {
  double mean;
  double variance;
};

// Conditional of s_i given the other sites. With `spatial` off the sites are
// independent with variance tau2.
NormalMoments car_conditional(std::size_t i, std::span<const double> s, const CarParams& params,
                              const CarStructure& structure, bool spatial = true);

// Precision of s: diag(E)(I - phi C) / tau2, or I / tau2 without the spatial term.
prob::SymMatrix car_precision(const CarParams& params, const CarStructure& structure,
                              bool spatial = true);

// log N(s | alpha + x beta, precision^-1), log-determinant from the spectrum.
double car_log_joint_prior(std::span<const double> s, const CarParams& params,
                           const CarStructure& structure, bool spatial = true);

class CarModel : public LatentModel {
 public:
  CarModel(const LipCancerData& data, CarVariant variant, std::size_t integration_draws = 200,
           CarPrior prior = {});

  std::string family() const override { return "car-" + to_string(variant_); }
  std::size_t n_units() const override { return y_.size(); }
  std::vector<std::string> theta_names() const override;

  std::unique_ptr<ChainKernel> make_kernel(std::optional<std::size_t> holdout,
                                           prob::RngStream& init_rng) const override;

  double unit_logpred(std::size_t i, Row row, double latent) const override;
  double regen_latent(std::size_t i, Row row, prob::RngStream& rng) const override;
  double int_logpred(std::size_t i, Row row, prob::RngStream& rng) const override;
  std::size_t integration_draws() const override { return draws_; }
  double midp(std::size_t i, Row row, double latent) const override;

  CarVariant variant() const { return variant_; }
  const CarStructure& structure() const { return structure_; }
  const std::vector<std::int64_t>& counts() const { return y_; }
  std::pair<double, double> support() const { return support_; }
  const CarPrior& prior() const { return prior_; }

  CarParams params(Row row) const;
  NormalMoments conditional(std::size_t i, Row row) const;

 private:
  std::vector<std::int64_t> y_;
  CarVariant variant_;
  CarStructure structure_;
  std::pair<double, double> support_;
  std::size_t draws_;
  CarPrior prior_;
};

}  // namespace cveval::models
