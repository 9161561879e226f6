#include "cveval/eval/evaluators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cveval/error.hpp"
#include "cveval/prob/numeric.hpp"
#include "cveval/prob/special.hpp"

namespace cveval::eval {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kTargetBatches = 20;

void require_draws(const SampleStore& store, const char* what) {
  if (store.empty()) throw ArgumentError(std::string(what) + ": empty sample store");
}

// Contiguous batches that never straddle two chains.
std::vector<std::pair<std::size_t, std::size_t>> batches(const SampleStore& store) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t per_chain = store.per_chain();
  const std::size_t b = std::max<std::size_t>(1, kTargetBatches / std::max<std::size_t>(1, store.n_chains()));
  if (per_chain < 2 * b) return out;
  const std::size_t len = per_chain / b;
  for (std::size_t c = 0; c < store.n_chains(); ++c) {
    for (std::size_t k = 0; k < b; ++k) {
      const std::size_t begin = c * per_chain + k * len;
      const std::size_t end = k + 1 == b ? (c + 1) * per_chain : begin + len;
      out.emplace_back(begin, end);
    }
  }
  return out;
}

double batch_mean(std::span<const double> x, std::pair<std::size_t, std::size_t> range) {
  double acc = 0.0;
  for (std::size_t s = range.first; s < range.second; ++s) acc += x[s];
  return acc / static_cast<double>(range.second - range.first);
}

// Standard error of the mean of x by batch means.
double se_of_mean(const SampleStore& store, std::span<const double> x) {
  if (store.is_weighted()) return 0.0;
  const auto bs = batches(store);
  if (bs.size() < 2) return 0.0;
  std::vector<double> means;
  for (const auto& r : bs) means.push_back(batch_mean(x, r));
  return std::sqrt(prob::sample_variance(means) / static_cast<double>(means.size()));
}

// Standard error of sum(num) / sum(den) by batch means and the delta method.
double se_of_ratio(const SampleStore& store, std::span<const double> num,
                   std::span<const double> den) {
  if (store.is_weighted()) return 0.0;
  const auto bs = batches(store);
  if (bs.size() < 2) return 0.0;
  const double ratio = std::accumulate(num.begin(), num.end(), 0.0) /
                       std::accumulate(den.begin(), den.end(), 0.0);
  const double den_mean = prob::mean(den);
  std::vector<double> resid;
  for (const auto& r : bs) resid.push_back(batch_mean(num, r) - ratio * batch_mean(den, r));
  return std::sqrt(prob::sample_variance(resid) / static_cast<double>(resid.size())) / den_mean;
}

// Relative standard error of mean(exp(x)), i.e. the se of its log.
double se_of_log_mean_exp(const SampleStore& store, std::span<const double> x) {
  if (store.is_weighted()) return 0.0;
  const double hi = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(hi)) return 0.0;
  std::vector<double> w(x.size());
  for (std::size_t s = 0; s < x.size(); ++s) w[s] = std::exp(x[s] - hi);
  const double m = prob::mean(w);
  return se_of_mean(store, w) / m;
}

std::vector<double> negated(std::span<const double> x) {
  std::vector<double> out(x.size());
  for (std::size_t s = 0; s < x.size(); ++s) out[s] = -x[s];
  return out;
}

// log of sum_s w_s exp(terms_s), with w_s the store weights (1 when absent).
double weighted_lse(std::span<const double> terms, std::span<const double> log_weights) {
  if (log_weights.empty()) return prob::log_sum_exp(terms);
  std::vector<double> t(terms.size());
  for (std::size_t s = 0; s < t.size(); ++s) t[s] = terms[s] + log_weights[s];
  return prob::log_sum_exp(t);
}

double log_total_weight(std::size_t size, std::span<const double> log_weights) {
  if (log_weights.empty()) return std::log(static_cast<double>(size));
  return prob::log_sum_exp(log_weights);
}

bool any_neg_inf(std::span<const double> x) {
  return std::any_of(x.begin(), x.end(), [](double v) { return v == kNegInf; });
}

// sum_s a_s W_s / sum_s W_s with log W_s = log_w_s. Returned together with
// the delta-method standard error.
std::pair<double, double> weighted_ratio(const SampleStore& store, std::span<const double> a,
                                         std::span<const double> log_w) {
  std::vector<double> lw(log_w.begin(), log_w.end());
  if (store.is_weighted())
    for (std::size_t s = 0; s < lw.size(); ++s) lw[s] += store.log_weights()[s];
  const double hi = *std::max_element(lw.begin(), lw.end());
  if (!std::isfinite(hi)) throw NumericalError("importance weights are all zero or infinite");
  std::vector<double> num(a.size()), den(a.size());
  for (std::size_t s = 0; s < a.size(); ++s) {
    den[s] = std::exp(lw[s] - hi);
    num[s] = a[s] * den[s];
  }
  const double value = std::accumulate(num.begin(), num.end(), 0.0) /
                       std::accumulate(den.begin(), den.end(), 0.0);
  return {value, se_of_ratio(store, num, den)};
}

std::vector<double> evaluate_at_stored(const SampleStore& store, const LatentModel& model,
                                       std::size_t i, const EvalFunction& a) {
  std::vector<double> out(store.size());
  for (std::size_t s = 0; s < store.size(); ++s) {
    const auto row = store.row(s);
    out[s] = a.fn(model, i, row, model.latent(i, row));
  }
  return out;
}

// A_s: a averaged over the conditional prior of b_i.
std::vector<double> integrated_evaluation(const SampleStore& store, const LatentModel& model,
                                          std::size_t i, const EvalFunction& a,
                                          std::size_t k_draws, const prob::RngStream& rng) {
  if (k_draws == 0) throw ArgumentError("integrated evaluation: k_draws must be positive");
  std::vector<double> out(store.size());
  std::vector<double> values, log_probs;
  for (std::size_t s = 0; s < store.size(); ++s) {
    const auto row = store.row(s);
    if (model.latent_atoms(i, row, values, log_probs)) {
      double acc = 0.0;
      for (std::size_t k = 0; k < values.size(); ++k)
        if (log_probs[k] != kNegInf) acc += std::exp(log_probs[k]) * a.fn(model, i, row, values[k]);
      out[s] = acc;
      continue;
    }
    prob::RngStream sub = rng.split(s);
    double acc = 0.0;
    for (std::size_t k = 0; k < k_draws; ++k) acc += a.fn(model, i, row, model.regen_latent(i, row, sub));
    out[s] = acc / static_cast<double>(k_draws);
  }
  return out;
}

PerUnitEvaluation make(std::size_t i, const char* method, double value, double se) {
  return PerUnitEvaluation{i, method, value, se};
}

PerUnitEvaluation harmonic_from(const SampleStore& store, std::size_t i, const char* method,
                                std::span<const double> ld) {
  const double value = harmonic_log_ppd(ld, store.log_weights());
  return make(i, method, value, std::isfinite(value) ? se_of_log_mean_exp(store, negated(ld)) : 0.0);
}

PerUnitEvaluation waic_from(const SampleStore& store, std::size_t i, const char* method,
                            std::span<const double> ld) {
  return make(i, method, waic_log_ppd(ld, store.log_weights()), se_of_log_mean_exp(store, ld));
}

}  // namespace

EvalFunction EvalFunction::pred_density() {
  return {"pred-density", [](const LatentModel& m, std::size_t i, Row row, double b) {
            return std::exp(m.unit_logpred(i, row, b));
          }};
}

EvalFunction EvalFunction::midp() {
  return {"mid-p", [](const LatentModel& m, std::size_t i, Row row, double b) {
            return m.midp(i, row, b);
          }};
}

EvalFunction EvalFunction::constant(double c) {
  return {"constant", [c](const LatentModel&, std::size_t, Row, double) { return c; }};
}

double harmonic_log_ppd(std::span<const double> log_dens, std::span<const double> log_weights) {
  if (log_dens.empty()) throw ArgumentError("harmonic_log_ppd: no draws");
  if (any_neg_inf(log_dens)) return kNegInf;
  const auto neg = negated(log_dens);
  return log_total_weight(log_dens.size(), log_weights) - weighted_lse(neg, log_weights);
}

double waic_log_ppd(std::span<const double> log_dens, std::span<const double> log_weights) {
  if (log_dens.size() < 2) throw ArgumentError("waic_log_ppd: need at least two draws");
  const double log_mean = weighted_lse(log_dens, log_weights) -
                          log_total_weight(log_dens.size(), log_weights);
  if (any_neg_inf(log_dens)) return kNegInf;
  const double penalty = log_weights.empty() ? prob::sample_variance(log_dens)
                                             : prob::weighted_variance(log_dens, log_weights);
  return log_mean - penalty;
}

std::vector<double> nonint_log_densities(const SampleStore& store, const LatentModel& model,
                                         std::size_t i) {
  std::vector<double> out(store.size());
  for (std::size_t s = 0; s < store.size(); ++s) out[s] = model.nonint_logpred(i, store.row(s));
  return out;
}

std::vector<double> int_log_densities(const SampleStore& store, const LatentModel& model,
                                      std::size_t i, const prob::RngStream& rng) {
  std::vector<double> out(store.size());
  for (std::size_t s = 0; s < store.size(); ++s) {
    prob::RngStream sub = rng.split(s);
    out[s] = model.int_logpred(i, store.row(s), sub);
  }
  return out;
}

PerUnitEvaluation actual_cv_expectation(const SampleStore& cv_store, const LatentModel& model,
                                        std::size_t i, const EvalFunction& a) {
  require_draws(cv_store, "actual_cv_expectation");
  const auto values = evaluate_at_stored(cv_store, model, i, a);
  const double value = cv_store.is_weighted()
                           ? prob::weighted_mean(values, cv_store.log_weights())
                           : prob::mean(values);
  return make(i, "actual-cv", value, se_of_mean(cv_store, values));
}

PerUnitEvaluation actual_cv_log_ppd(const SampleStore& cv_store, const LatentModel& model,
                                    std::size_t i) {
  require_draws(cv_store, "actual_cv_log_ppd");
  const auto ld = nonint_log_densities(cv_store, model, i);
  const double value =
      weighted_lse(ld, cv_store.log_weights()) - log_total_weight(ld.size(), cv_store.log_weights());
  return make(i, "actual-cv", value, se_of_log_mean_exp(cv_store, ld));
}

PerUnitEvaluation nis_ppd(const SampleStore& store, const LatentModel& model, std::size_t i) {
  require_draws(store, "nis_ppd");
  return harmonic_from(store, i, "nis", nonint_log_densities(store, model, i));
}

PerUnitEvaluation iis_ppd(const SampleStore& store, const LatentModel& model, std::size_t i,
                          const prob::RngStream& rng) {
  require_draws(store, "iis_ppd");
  return harmonic_from(store, i, "iis", int_log_densities(store, model, i, rng));
}

LogPpdApproximations log_ppd_approximations(const SampleStore& store, const LatentModel& model,
                                            std::size_t i, const prob::RngStream& rng) {
  require_draws(store, "log_ppd_approximations");
  const auto nonint = nonint_log_densities(store, model, i);
  const auto integrated = int_log_densities(store, model, i, rng);
  return {harmonic_from(store, i, "nis", nonint), harmonic_from(store, i, "iis", integrated),
          waic_from(store, i, "nwaic", nonint), waic_from(store, i, "iwaic", integrated)};
}

PerUnitEvaluation is_expectation(const SampleStore& store, const LatentModel& model,
                                 std::size_t i, const EvalFunction& a) {
  require_draws(store, "is_expectation");
  const auto ld = nonint_log_densities(store, model, i);
  if (a.tag == "pred-density") {
    // The numerator is exactly one per draw.
    const double value = std::exp(harmonic_log_ppd(ld, store.log_weights()));
    return make(i, "nis", value, value * se_of_log_mean_exp(store, negated(ld)));
  }
  const auto values = evaluate_at_stored(store, model, i, a);
  const auto [value, se] = weighted_ratio(store, values, negated(ld));
  return make(i, "nis", value, se);
}

PerUnitEvaluation iis_expectation(const SampleStore& store, const LatentModel& model,
                                  std::size_t i, const EvalFunction& a, std::size_t k_draws,
                                  const prob::RngStream& rng) {
  require_draws(store, "iis_expectation");
  if (a.tag == "pred-density") {
    auto out = iis_ppd(store, model, i, rng);
    out.value = std::exp(out.value);
    out.mc_se *= out.value;
    return out;
  }
  const auto ld = int_log_densities(store, model, i, rng);
  const auto values = integrated_evaluation(store, model, i, a, k_draws, rng);
  const auto [value, se] = weighted_ratio(store, values, negated(ld));
  return make(i, "iis", value, se);
}

PerUnitEvaluation waic_ppd(std::span<const double> log_dens) {
  return make(0, "waic", waic_log_ppd(log_dens), 0.0);
}

PerUnitEvaluation nwaic_ppd(const SampleStore& store, const LatentModel& model, std::size_t i) {
  require_draws(store, "nwaic_ppd");
  return waic_from(store, i, "nwaic", nonint_log_densities(store, model, i));
}

PerUnitEvaluation iwaic_ppd(const SampleStore& store, const LatentModel& model, std::size_t i,
                            const prob::RngStream& rng) {
  require_draws(store, "iwaic_ppd");
  return waic_from(store, i, "iwaic", int_log_densities(store, model, i, rng));
}

PerUnitEvaluation posterior_check_pvalue(const SampleStore& store, const LatentModel& model,
                                         std::size_t i, const EvalFunction& a) {
  require_draws(store, "posterior_check_pvalue");
  const auto values = evaluate_at_stored(store, model, i, a);
  const double value =
      store.is_weighted() ? prob::weighted_mean(values, store.log_weights()) : prob::mean(values);
  return make(i, "posterior-check", value, se_of_mean(store, values));
}

PerUnitEvaluation ghosting_pvalue(const SampleStore& store, const LatentModel& model,
                                  std::size_t i, const EvalFunction& a, std::size_t k_draws,
                                  const prob::RngStream& rng) {
  require_draws(store, "ghosting_pvalue");
  const auto values = integrated_evaluation(store, model, i, a, k_draws, rng);
  const double value =
      store.is_weighted() ? prob::weighted_mean(values, store.log_weights()) : prob::mean(values);
  return make(i, "ghosting", value, se_of_mean(store, values));
}

double ic_from_units(std::span<const std::optional<double>> log_ppd) {
  std::string missing;
  double acc = 0.0;
  for (std::size_t i = 0; i < log_ppd.size(); ++i) {
    if (!log_ppd[i]) {
      missing += (missing.empty() ? "" : ", ") + std::to_string(i + 1);
      continue;
    }
    acc += *log_ppd[i];
  }
  if (!missing.empty()) throw ArgumentError("ic_from_units: missing units " + missing);
  return -2.0 * acc;
}

double ic_from_units(std::span<const double> log_ppd) {
  double acc = 0.0;
  for (double v : log_ppd) acc += v;
  return -2.0 * acc;
}

DicResult dic(const SampleStore& store, const LatentModel& model) {
  require_draws(store, "dic");
  std::vector<double> deviance(store.size(), 0.0);
  for (std::size_t s = 0; s < store.size(); ++s) {
    const auto row = store.row(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < model.n_units(); ++i) acc += model.nonint_logpred(i, row);
    deviance[s] = -2.0 * acc;
  }
  double mean_d, var_d;
  if (store.is_weighted()) {
    mean_d = prob::weighted_mean(deviance, store.log_weights());
    var_d = prob::weighted_variance(deviance, store.log_weights());
  } else {
    mean_d = prob::mean(deviance);
    var_d = deviance.size() > 1 ? prob::sample_variance(deviance) : 0.0;
  }
  return {mean_d + 0.5 * var_d, mean_d, 0.5 * var_d};
}

double relative_error(std::span<const double> estimated, std::span<const double> actual) {
  if (estimated.size() != actual.size() || actual.empty())
    throw ArgumentError("relative_error: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double p = actual[i];
    if (!(p > 0.0 && p < 1.0))
      throw ArgumentError("relative_error: reference p-value " + std::to_string(i + 1) +
                          " is not strictly inside (0, 1)");
    acc += std::fabs(estimated[i] - p) / std::min(p, 1.0 - p);
  }
  return acc / static_cast<double>(actual.size()) * 100.0;
}

double paired_onesided_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("paired_onesided_ttest: length mismatch");
  if (a.size() < 2) throw ArgumentError("paired_onesided_ttest: need at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = a[k] - b[k];
  const double mean_d = prob::mean(d);
  const double sd = std::sqrt(prob::sample_variance(d));
  if (sd == 0.0) {
    if (mean_d == 0.0) return 0.5;
    return mean_d > 0.0 ? 0.0 : 1.0;
  }
  const double t = mean_d / (sd / std::sqrt(static_cast<double>(d.size())));
  return 1.0 - prob::student_t_cdf(t, static_cast<double>(d.size() - 1));
}

double ttest_replication_average(const std::vector<std::vector<double>>& runs_a,
                                 const std::vector<std::vector<double>>& runs_b,
                                 std::size_t draws, prob::RngStream rng) {
  if (runs_a.empty() || runs_b.empty()) throw ArgumentError("ttest_replication_average: no runs");
  if (draws == 0) throw ArgumentError("ttest_replication_average: draws must be positive");
  double acc = 0.0;
  for (std::size_t k = 0; k < draws; ++k) {
    const auto& ra = runs_a[rng() % runs_a.size()];
    const auto& rb = runs_b[rng() % runs_b.size()];
    acc += paired_onesided_ttest(ra, rb);
  }
  return acc / static_cast<double>(draws);
}

}  // namespace cveval::eval
