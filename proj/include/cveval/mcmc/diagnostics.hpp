#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cveval/mcmc/sample_store.hpp"

namespace cveval::mcmc {

// Split potential scale reduction for one column: every chain is cut in
// half and the halves are compared as separate chains.
double split_rhat(const SampleStore& store, std::size_t column);

// Effective sample size across chains, autocorrelations truncated by Geyer's
// initial monotone sequence.
double effective_sample_size(const SampleStore& store, std::size_t column);

struct ColumnSummary {
  std::string name;
  double mean;
  double sd;
  double rhat;
  double ess;
};

// Summaries of all parameter columns. Reported only; nothing gates on them.
std::vector<ColumnSummary> summarize(const SampleStore& store);

}  // namespace cveval::mcmc
