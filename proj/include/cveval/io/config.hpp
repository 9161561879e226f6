#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cveval/io/datasets.hpp"
#include "cveval/mcmc/chain.hpp"
#include "cveval/models/car.hpp"
#include "cveval/models/mixture.hpp"
#include "cveval/models/seeds.hpp"

namespace cveval::io {

enum class Family { Mixture, Car, Seeds };
enum class DataSource { Observed, Simulated };
// What a study replicates: information criteria, or p-values and their
// relative errors.
enum class StudyTarget { Criteria, PValues };

std::string to_string(Family family);

// Method names accepted in `methods`.
inline const std::vector<std::string> kCriterionMethods{"nis", "iis", "nwaic", "iwaic", "dic"};
inline const std::vector<std::string> kPValueMethods{"posterior-check", "ghosting", "nis", "iis"};

struct RunConfig {
  Family family = Family::Mixture;
  // Candidate models: component counts for the mixture, variants for CAR.
  std::vector<std::size_t> components{5};
  std::vector<models::CarVariant> variants{models::CarVariant::SpatialLinear};

  DataSource source = DataSource::Observed;
  std::filesystem::path galaxy_path;
  std::filesystem::path lipcancer_path;
  std::filesystem::path adjacency_path;
  std::filesystem::path seeds_path;
  AdjacencyPolicy adjacency_policy = AdjacencyPolicy::Strict;
  // Multiplies the lip-cancer covariate as loaded (percent).
  double covariate_scale = 1.0;
  // Size of each simulated mixture data set.
  std::size_t simulated_units = 200;
  // (a0, a1, a2, a12, sigma2) used to simulate seeds data on the loaded design.
  std::vector<double> simulation_theta{-0.55, 0.08, 1.35, -0.82, 0.09};

  // Mixture prior; nullopt centres it on each data set.
  std::optional<models::MixturePrior> mixture_prior = models::MixturePrior{};
  models::CarPrior car_prior;
  models::SeedsPrior seeds_prior;

  mcmc::ChainConfig chain;
  std::vector<std::string> methods;
  StudyTarget target = StudyTarget::Criteria;
  // Draws of b_i per stored draw for integrated densities (R) and for
  // integrated evaluation functions.
  std::size_t integration_draws = 0;
  std::size_t eval_draws = 0;
  std::size_t replications = 1;
  bool actual_cv = false;
  // Random pairings averaged by the replicated paired t-test.
  std::size_t ttest_draws = 1000;
  // 1-based unit for the draw-level scatter files; 0 turns them off.
  std::size_t scatter_unit = 0;
  bool spill = false;

  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  bool full_scale = false;

  // Text of the config file, kept for the manifest.
  std::string source_text;

  // Number of candidate models.
  std::size_t n_candidates() const;
  std::vector<std::string> candidate_labels() const;

  // Throws ConfigurationError describing the first problem found.
  void validate() const;
};

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out_dir;
  bool full_scale = false;
};

// Reads a TOML run file. Relative dataset paths resolve against the file's
// directory. With `full_scale`, the [full_scale] table (or the family's
// built-in long-run settings) replaces the chain and replication settings.
RunConfig load_run_config(const std::filesystem::path& path, const CliOverrides& overrides = {});
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const CliOverrides& overrides = {});

}  // namespace cveval::io
