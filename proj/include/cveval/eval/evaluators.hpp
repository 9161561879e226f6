#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cveval/mcmc/sample_store.hpp"
#include "cveval/models/latent_model.hpp"
#include "cveval/prob/rng.hpp"

namespace cveval::eval {

using mcmc::SampleStore;
using models::LatentModel;
using models::Row;

struct PerUnitEvaluation {
  std::size_t unit = 0;
  std::string method;
  // Log predictive density, or a p-value.
  double value = 0.0;
  double mc_se = 0.0;
};

// a(y_i^obs, theta, b_i) for a unit, given the draw and a latent value.
struct EvalFunction {
  std::string tag;
  std::function<double(const LatentModel&, std::size_t, Row, double)> fn;

  static EvalFunction pred_density();
  static EvalFunction midp();
  static EvalFunction constant(double c);
};

// Shared kernels on per-draw log densities. Optional log weights turn the
// plain averages into weighted ones.
double harmonic_log_ppd(std::span<const double> log_dens, std::span<const double> log_weights = {});
double waic_log_ppd(std::span<const double> log_dens, std::span<const double> log_weights = {});

// Per-draw log P(y_i | theta, b_i) and log P(y_i | theta, b_-i).
std::vector<double> nonint_log_densities(const SampleStore& store, const LatentModel& model,
                                         std::size_t i);
// `rng` is the unit's evaluation stream; draw s uses rng.split(s).
std::vector<double> int_log_densities(const SampleStore& store, const LatentModel& model,
                                      std::size_t i, const prob::RngStream& rng);

// Mean of a over a hold-out store.
PerUnitEvaluation actual_cv_expectation(const SampleStore& cv_store, const LatentModel& model,
                                        std::size_t i, const EvalFunction& a);
// log of the hold-out mean predictive density, averaged in log space.
PerUnitEvaluation actual_cv_log_ppd(const SampleStore& cv_store, const LatentModel& model,
                                    std::size_t i);

PerUnitEvaluation nis_ppd(const SampleStore& store, const LatentModel& model, std::size_t i);
PerUnitEvaluation iis_ppd(const SampleStore& store, const LatentModel& model, std::size_t i,
                          const prob::RngStream& rng);
PerUnitEvaluation is_expectation(const SampleStore& store, const LatentModel& model,
                                 std::size_t i, const EvalFunction& a);
// A_s averages a over k_draws regenerated latents (exactly over the atoms when
// the latent is discrete); W_s is the inverse integrated density.
PerUnitEvaluation iis_expectation(const SampleStore& store, const LatentModel& model,
                                  std::size_t i, const EvalFunction& a, std::size_t k_draws,
                                  const prob::RngStream& rng);

struct LogPpdApproximations {
  PerUnitEvaluation nis, iis, nwaic, iwaic;
};

// The four approximations above from one pass over the draws; each equals the
// corresponding single-method call with the same rng.
LogPpdApproximations log_ppd_approximations(const SampleStore& store, const LatentModel& model,
                                            std::size_t i, const prob::RngStream& rng);

PerUnitEvaluation waic_ppd(std::span<const double> log_dens);
PerUnitEvaluation nwaic_ppd(const SampleStore& store, const LatentModel& model, std::size_t i);
PerUnitEvaluation iwaic_ppd(const SampleStore& store, const LatentModel& model, std::size_t i,
                            const prob::RngStream& rng);

PerUnitEvaluation posterior_check_pvalue(const SampleStore& store, const LatentModel& model,
                                         std::size_t i, const EvalFunction& a = EvalFunction::midp());
PerUnitEvaluation ghosting_pvalue(const SampleStore& store, const LatentModel& model,
                                  std::size_t i, const EvalFunction& a, std::size_t k_draws,
                                  const prob::RngStream& rng);

// -2 sum of per-unit log PPDs. Missing units raise an error naming them.
double ic_from_units(std::span<const std::optional<double>> log_ppd);
double ic_from_units(std::span<const double> log_ppd);

inline constexpr const char* kDicConvention = "pD=var(D)/2 on the non-integrated deviance";

struct DicResult {
  double dic;
  double mean_deviance;
  double p_d;
};

// D_s = -2 sum_i log P(y_i | theta_s, b_i,s); DIC = mean(D) + var(D)/2.
DicResult dic(const SampleStore& store, const LatentModel& model);

double relative_error(std::span<const double> estimated, std::span<const double> actual);

// One-sided paired t-test of mean(a - b) > 0.
double paired_onesided_ttest(std::span<const double> a, std::span<const double> b);

// Mean p-value over `draws` random pairings (with replacement) of one run
// from each side.
double ttest_replication_average(const std::vector<std::vector<double>>& runs_a,
                                 const std::vector<std::vector<double>>& runs_b,
                                 std::size_t draws, prob::RngStream rng);

}  // namespace cveval::eval
