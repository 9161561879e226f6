#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cveval/io/config.hpp"
#include "cveval/io/output.hpp"
#include "cveval/mcmc/chain.hpp"
#include "cveval/models/data.hpp"
#include "cveval/models/latent_model.hpp"
#include "cveval/prob/rng.hpp"

namespace cveval::io {

// One data set in the form its family needs; only the matching member is set.
struct Dataset {
  std::vector<double> galaxy;
  models::LipCancerData lipcancer;
  models::SeedsData seeds;
};

Dataset load_observed(const RunConfig& config, std::vector<std::string>* warnings = nullptr);
// Observed data as is, or a fresh simulated set for the replication.
Dataset replication_dataset(const RunConfig& config, const Dataset& observed,
                            std::uint64_t replication_seed);
Table dataset_table(const RunConfig& config, const Dataset& data);

std::unique_ptr<models::LatentModel> build_model(const RunConfig& config, const Dataset& data,
                                                 std::size_t candidate);

// Seeds below the master seed. Everything a replication draws hangs off its
// own seed, so replications can run in any order.
std::uint64_t replication_seed(std::uint64_t master, std::size_t replication);
mcmc::ChainConfig candidate_chain(const RunConfig& config, std::uint64_t replication_seed,
                                  std::size_t candidate, std::size_t threads);
// Unit i's evaluation stream is the returned stream split by i.
prob::RngStream evaluation_stream(std::uint64_t replication_seed, std::size_t candidate);

struct UnitValue {
  std::string method;
  std::size_t unit = 0;
  double value = 0.0;
  double mc_se = 0.0;
};

// Log-PPD approximations for every unit and every requested method except DIC.
std::vector<UnitValue> evaluate_criteria(const RunConfig& config, const models::LatentModel& model,
                                         const mcmc::SampleStore& store, const prob::RngStream& rng,
                                         std::size_t threads);
// Mid-p value estimates for every unit and requested method.
std::vector<UnitValue> evaluate_pvalues(const RunConfig& config, const models::LatentModel& model,
                                        const mcmc::SampleStore& store, const prob::RngStream& rng,
                                        std::size_t threads);

struct ActualCv {
  std::vector<double> log_ppd, log_ppd_se;
  std::vector<double> midp, midp_se;
  mcmc::CvRunReport report;
};

// Hold-out refits of every unit. `inspect` sees each hold-out store.
ActualCv run_actual_cv(const models::LatentModel& model, const mcmc::ChainConfig& chain,
                       const std::function<void(std::size_t, const mcmc::SampleStore&)>& inspect = {});

inline constexpr const char* kActualMethod = "cvic";
inline constexpr const char* kActualPValue = "actual";

// Per-unit value from one replication. Units are 1-based.
struct UnitRecord {
  std::size_t replication = 0;
  std::string model;
  std::string method;
  std::size_t unit = 0;
  double value = 0.0;
  double mc_se = 0.0;
};

// Per-replication, per-model number: an IC, a DIC, or a relative error.
struct ScalarRecord {
  std::size_t replication = 0;
  std::string model;
  std::string method;
  double value = 0.0;
};

struct StudyResult {
  StudyTarget target = StudyTarget::Criteria;
  std::size_t replications = 0;
  std::size_t n_units = 0;
  // Every replication refits the same observed data.
  bool shared_data = true;
  std::vector<std::string> models;
  // Table columns in order.
  std::vector<std::string> methods;
  std::vector<UnitRecord> units;
  // Quantities that are not sums over units (DIC).
  std::vector<ScalarRecord> model_level;
  std::vector<std::string> failures;
};

StudyResult run_study(const RunConfig& config, std::vector<std::string>* warnings = nullptr);

// IC = -2 sum of log PPDs per (replication, model, method), or relative
// error against the actual CV p-values, followed by the model-level records.
std::vector<ScalarRecord> aggregate(const StudyResult& result);

// Rows are models; each method gets mean, sd and effective-M columns. The sd
// cell is empty when only one replication contributed.
Table results_table(const StudyResult& result);
// How often each model has the smallest IC, per method.
Table selection_table(const StudyResult& result);
// Replicated one-sided paired t-tests of each model against the one before it.
Table ttest_table(const StudyResult& result, std::size_t draws, std::uint64_t master_seed);

Table unit_records_table(const std::vector<UnitRecord>& records);
std::vector<UnitRecord> unit_records_from(const Table& table);
Table scalar_records_table(const std::vector<ScalarRecord>& records);
std::vector<ScalarRecord> scalar_records_from(const Table& table);

}  // namespace cveval::io
