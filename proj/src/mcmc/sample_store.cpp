#include "cveval/mcmc/sample_store.hpp"

#include <algorithm>
#include <cmath>

#include "cveval/error.hpp"

namespace cveval::mcmc {

SampleStore::SampleStore(std::vector<std::string> theta_names, std::size_t n_units,
                         std::size_t n_chains, std::size_t per_chain)
    : theta_names_(std::move(theta_names)),
      n_units_(n_units),
      n_chains_(n_chains),
      per_chain_(per_chain),
      data_(n_chains * per_chain * (theta_names_.size() + n_units), 0.0) {}

SampleStore SampleStore::weighted(std::vector<std::string> theta_names, std::size_t n_units,
                                  const std::vector<std::vector<double>>& rows,
                                  std::vector<double> log_weights) {
  if (rows.size() != log_weights.size())
    throw ArgumentError("weighted store: one weight per row required");
  if (rows.empty()) throw ArgumentError("weighted store: no rows");
  SampleStore store(std::move(theta_names), n_units, 1, rows.size());
  for (std::size_t s = 0; s < rows.size(); ++s) {
    if (rows[s].size() != store.width()) throw ArgumentError("weighted store: row width mismatch");
    std::copy(rows[s].begin(), rows[s].end(), store.row(0, s).begin());
  }
  store.set_log_weights(std::move(log_weights));
  return store;
}

void SampleStore::set_log_weights(std::vector<double> log_weights) {
  if (!log_weights.empty()) {
    if (log_weights.size() != size()) throw ArgumentError("sample store: one weight per draw required");
    if (std::none_of(log_weights.begin(), log_weights.end(), [](double w) { return std::isfinite(w); }))
      throw ArgumentError("sample store: every weight is zero");
  }
  log_weights_ = std::move(log_weights);
}

std::vector<double> SampleStore::column(std::size_t c) const {
  if (c >= width()) throw ArgumentError("sample store: column out of range");
  std::vector<double> out(size());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = data_[s * width() + c];
  return out;
}

std::size_t SampleStore::column_index(const std::string& theta_name) const {
  const auto it = std::find(theta_names_.begin(), theta_names_.end(), theta_name);
  if (it == theta_names_.end()) throw ArgumentError("sample store: no parameter '" + theta_name + "'");
  return static_cast<std::size_t>(it - theta_names_.begin());
}

}  // namespace cveval::mcmc
