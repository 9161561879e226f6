#include "cveval/mcmc/diagnostics.hpp"

#include <cmath>
#include <limits>

#include "cveval/error.hpp"
#include "cveval/prob/numeric.hpp"

namespace cveval::mcmc {

namespace {

std::vector<std::vector<double>> chain_columns(const SampleStore& store, std::size_t column) {
  std::vector<std::vector<double>> out(store.n_chains());
  for (std::size_t s = 0; s < store.size(); ++s)
    out[store.chain_of(s)].push_back(store.row(s)[column]);
  return out;
}

}  // namespace

double split_rhat(const SampleStore& store, std::size_t column) {
  const std::size_t half = store.per_chain() / 2;
  if (half < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> pieces;
  for (const auto& chain : chain_columns(store, column)) {
    pieces.emplace_back(chain.begin(), chain.begin() + static_cast<std::ptrdiff_t>(half));
    pieces.emplace_back(chain.end() - static_cast<std::ptrdiff_t>(half), chain.end());
  }
  std::vector<double> means, vars;
  for (const auto& p : pieces) {
    means.push_back(prob::mean(p));
    vars.push_back(prob::sample_variance(p));
  }
  const double n = static_cast<double>(half);
  const double within = prob::mean(vars);
  const double between = n * prob::sample_variance(means);
  if (within == 0.0) return between == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double pooled = (n - 1.0) / n * within + between / n;
  return std::sqrt(pooled / within);
}

double effective_sample_size(const SampleStore& store, std::size_t column) {
  const auto chains = chain_columns(store, column);
  const std::size_t n = store.per_chain();
  const std::size_t m = chains.size();
  if (n < 4) return static_cast<double>(n * m);
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = prob::mean(chains[c]);
    vars[c] = prob::sample_variance(chains[c]);
  }
  const double within = prob::mean(vars);
  const double nd = static_cast<double>(n);
  const double var_plus =
      (nd - 1.0) / nd * within + (m > 1 ? prob::sample_variance(means) : 0.0);
  if (var_plus <= 0.0) return static_cast<double>(n * m);
  auto rho = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double cov = 0.0;
      for (std::size_t t = 0; t + lag < n; ++t)
        cov += (chains[c][t] - means[c]) * (chains[c][t + lag] - means[c]);
      acc += cov / nd;
    }
    return 1.0 - (within - acc / static_cast<double>(m)) / var_plus;
  };
  double sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    double pair = rho(lag) + rho(lag + 1);
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    sum += pair;
  }
  const double tau = std::max(2.0 * sum - 1.0, 1.0 / std::log10(static_cast<double>(n * m)));
  return static_cast<double>(n * m) / tau;
}

std::vector<ColumnSummary> summarize(const SampleStore& store) {
  std::vector<ColumnSummary> out;
  for (std::size_t k = 0; k < store.n_theta(); ++k) {
    const auto col = store.column(k);
    out.push_back({store.theta_names()[k], prob::mean(col),
                   col.size() > 1 ? std::sqrt(prob::sample_variance(col)) : 0.0,
                   split_rhat(store, k), effective_sample_size(store, k)});
  }
  return out;
}

}  // namespace cveval::mcmc
