#include "cveval/mcmc/chain.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "cveval/error.hpp"
#include "cveval/prob/rng.hpp"

namespace cveval::mcmc {

namespace {

void run_one_chain(const models::LatentModel& model, std::optional<std::size_t> holdout,
                   const ChainConfig& config, prob::RngStream rng, std::size_t chain,
                   SampleStore& store, std::vector<std::pair<std::string, double>>* acceptance) {
  auto kernel = model.make_kernel(holdout, rng);
  kernel->set_adapting(true);
  for (std::size_t t = 0; t < config.n_adapt; ++t) kernel->sweep(rng);
  kernel->set_adapting(false);
  for (std::size_t t = 0; t < config.n_burn; ++t) kernel->sweep(rng);
  std::size_t kept = 0;
  const std::size_t keep = config.retained_per_chain();
  for (std::size_t t = 0; t < config.n_sample && kept < keep; ++t) {
    kernel->sweep(rng);
    if ((t + 1) % config.thin != 0) continue;
    auto out = store.row(chain, kept);
    kernel->write_draw(out);
    for (std::size_t c = 0; c < out.size(); ++c) {
      if (!std::isfinite(out[c])) {
        const std::string column =
            c < store.n_theta() ? store.theta_names()[c] : "latent " + std::to_string(c - store.n_theta() + 1);
        throw NumericalError(model.family() + ": non-finite " + column + " in chain " +
                             std::to_string(chain) + " at sampling iteration " + std::to_string(t));
      }
    }
    ++kept;
  }
  if (acceptance) *acceptance = kernel->acceptance_rates();
}

SampleStore run_impl(const models::LatentModel& model, std::optional<std::size_t> holdout,
                     const ChainConfig& config, ChainReport* report) {
  config.validate();
  SampleStore store(model.theta_names(), model.n_units(), config.n_chains,
                    config.retained_per_chain());
  prob::RngStream base = holdout ? prob::RngStream(config.seed, streams::kHoldout).split(*holdout)
                                 : prob::RngStream(config.seed, streams::kFit);
  std::vector<std::vector<std::pair<std::string, double>>> acceptance(config.n_chains);
  parallel_for(config.n_chains, config.threads, [&](std::size_t c) {
    run_one_chain(model, holdout, config, base.split(c), c, store, &acceptance[c]);
  });
  if (report) report->acceptance = std::move(acceptance);
  return store;
}

}  // namespace

void ChainConfig::validate() const {
  if (n_chains == 0) throw ConfigurationError("chain config: need at least one chain");
  if (thin == 0) throw ConfigurationError("chain config: thin must be positive");
  if (retained_per_chain() == 0) throw ConfigurationError("chain config: no draws retained");
}

SampleStore run_chains(const models::LatentModel& model, const ChainConfig& config,
                       ChainReport* report) {
  return run_impl(model, std::nullopt, config, report);
}

SampleStore run_holdout(const models::LatentModel& model, std::size_t unit,
                        const ChainConfig& config, ChainReport* report) {
  if (unit >= model.n_units())
    throw ArgumentError("run_holdout: unit " + std::to_string(unit) + " out of range");
  return run_impl(model, unit, config, report);
}

CvRunReport actual_cv_run(const models::LatentModel& model, const ChainConfig& config,
                          const std::function<void(std::size_t, const SampleStore&)>& consume) {
  config.validate();
  const std::size_t n = model.n_units();
  ChainConfig inner = config;
  inner.threads = 1;
  std::vector<std::string> errors(n);
  std::vector<char> failed(n, 0);
  std::mutex consume_mutex;
  parallel_for(n, config.threads, [&](std::size_t i) {
    try {
      SampleStore store = run_holdout(model, i, inner);
      std::lock_guard lock(consume_mutex);
      consume(i, store);
    } catch (const std::exception& e) {
      failed[i] = 1;
      errors[i] = "unit " + std::to_string(i + 1) + ": " + e.what();
    }
  });
  CvRunReport report;
  for (std::size_t i = 0; i < n; ++i) {
    if (!failed[i]) continue;
    report.failed_units.push_back(i);
    report.messages.push_back(errors[i]);
  }
  return report;
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min(resolve_threads(threads), count);
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            task(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace cveval::mcmc
