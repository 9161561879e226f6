#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cveval/mcmc/sample_store.hpp"
#include "cveval/models/latent_model.hpp"

namespace cveval::mcmc {

// Stream ids under the master seed. Each purpose gets its own family of
// substreams so adding draws in one place never shifts another.
namespace streams {
inline constexpr std::uint64_t kFit = 1;
inline constexpr std::uint64_t kHoldout = 2;
inline constexpr std::uint64_t kEvaluation = 3;
inline constexpr std::uint64_t kSimulation = 4;
inline constexpr std::uint64_t kReplication = 5;
inline constexpr std::uint64_t kPairing = 6;
}  // namespace streams

struct ChainConfig {
  std::size_t n_chains = 1;
  std::size_t n_adapt = 1000;
  std::size_t n_burn = 2000;
  // Iterations after burn-in; every `thin`-th one is retained.
  std::size_t n_sample = 20000;
  std::size_t thin = 2;
  std::uint64_t seed = 1;
  // Worker threads; 0 picks the hardware concurrency.
  std::size_t threads = 0;

  std::size_t retained_per_chain() const { return n_sample / thin; }
  void validate() const;
};

struct ChainReport {
  // Acceptance rate of each random-walk block, per chain.
  std::vector<std::vector<std::pair<std::string, double>>> acceptance;
};

SampleStore run_chains(const models::LatentModel& model, const ChainConfig& config,
                       ChainReport* report = nullptr);

// Same kernels with unit i's likelihood factor removed.
SampleStore run_holdout(const models::LatentModel& model, std::size_t unit,
                        const ChainConfig& config, ChainReport* report = nullptr);

struct CvRunReport {
  std::vector<std::size_t> failed_units;
  std::vector<std::string> messages;
  bool complete() const { return failed_units.empty(); }
};

// One hold-out refit per unit. `consume` receives each finished store and may
// discard it; calls are serialized but their order follows completion.
CvRunReport actual_cv_run(const models::LatentModel& model, const ChainConfig& config,
                          const std::function<void(std::size_t, const SampleStore&)>& consume);

// Runs task(0..count-1) on up to `threads` workers. Exceptions are collected
// and the one from the lowest index is rethrown after all tasks finish.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task);

std::size_t resolve_threads(std::size_t requested);

}  // namespace cveval::mcmc
