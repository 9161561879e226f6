#include "cveval/io/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "cveval/error.hpp"

namespace cveval::io {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigurationError("config: " + msg); }

void check_keys(const toml::table& table, const std::string& where,
                const std::set<std::string>& allowed) {
  for (const auto& [key, node] : table) {
    (void)node;
    if (!allowed.count(std::string(key.str())))
      fail("unknown key '" + std::string(key.str()) + "'" + (where.empty() ? "" : " in [" + where + "]"));
  }
}

const toml::table* subtable(const toml::table& parent, const char* name) {
  const auto* node = parent.get(name);
  if (!node) return nullptr;
  const auto* t = node->as_table();
  if (!t) fail(std::string("'") + name + "' must be a table");
  return t;
}

std::optional<std::int64_t> get_int(const toml::table& t, const char* key) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  const auto v = node->value<std::int64_t>();
  if (!v) fail(std::string("'") + key + "' must be an integer");
  return v;
}

std::optional<std::size_t> get_count(const toml::table& t, const char* key) {
  const auto v = get_int(t, key);
  if (!v) return std::nullopt;
  if (*v < 0) fail(std::string("'") + key + "' must be non-negative");
  return static_cast<std::size_t>(*v);
}

std::optional<double> get_real(const toml::table& t, const char* key) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  const auto v = node->value<double>();
  if (!v) fail(std::string("'") + key + "' must be a number");
  return v;
}

std::optional<std::string> get_string(const toml::table& t, const char* key) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  const auto v = node->value<std::string>();
  if (!v) fail(std::string("'") + key + "' must be a string");
  return v;
}

std::optional<bool> get_bool(const toml::table& t, const char* key) {
  const auto* node = t.get(key);
  if (!node) return std::nullopt;
  const auto v = node->value<bool>();
  if (!v) fail(std::string("'") + key + "' must be true or false");
  return v;
}

const toml::array* get_array(const toml::table& t, const char* key) {
  const auto* node = t.get(key);
  if (!node) return nullptr;
  const auto* a = node->as_array();
  if (!a) fail(std::string("'") + key + "' must be an array");
  return a;
}

std::vector<double> real_array(const toml::array& a, const char* key) {
  std::vector<double> out;
  for (const auto& e : a) {
    const auto v = e.value<double>();
    if (!v) fail(std::string("'") + key + "' must hold numbers");
    out.push_back(*v);
  }
  return out;
}

std::vector<std::string> string_array(const toml::array& a, const char* key) {
  std::vector<std::string> out;
  for (const auto& e : a) {
    const auto v = e.value<std::string>();
    if (!v) fail(std::string("'") + key + "' must hold strings");
    out.push_back(*v);
  }
  return out;
}

void read_chain(const toml::table& t, const std::string& where, mcmc::ChainConfig& chain) {
  check_keys(t, where, {"chains", "adapt", "burn", "sample", "thin", "threads"});
  if (auto v = get_count(t, "chains")) chain.n_chains = *v;
  if (auto v = get_count(t, "adapt")) chain.n_adapt = *v;
  if (auto v = get_count(t, "burn")) chain.n_burn = *v;
  if (auto v = get_count(t, "sample")) chain.n_sample = *v;
  if (auto v = get_count(t, "thin")) chain.thin = *v;
  if (auto v = get_count(t, "threads")) chain.threads = *v;
}

// Long-run settings used by --full-scale when the file gives none.
void full_scale_defaults(Family family, mcmc::ChainConfig& chain, std::size_t& replications) {
  replications = 100;
  chain.thin = 1;
  switch (family) {
    case Family::Mixture:
      chain.n_chains = 5;
      chain.n_adapt = 2000;
      chain.n_burn = 2000;
      chain.n_sample = 100000;
      break;
    case Family::Car:
      chain.n_chains = 2;
      chain.n_adapt = 1000;
      chain.n_burn = 4000;
      chain.n_sample = 10000;
      break;
    case Family::Seeds:
      chain.n_chains = 5;
      chain.n_adapt = 1000;
      chain.n_burn = 2500;
      chain.n_sample = 10000;
      break;
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::Mixture:
      return "mixture";
    case Family::Car:
      return "car";
    case Family::Seeds:
      return "seeds";
  }
  return "?";
}

std::size_t RunConfig::n_candidates() const {
  switch (family) {
    case Family::Mixture:
      return components.size();
    case Family::Car:
      return variants.size();
    case Family::Seeds:
      return 1;
  }
  return 0;
}

std::vector<std::string> RunConfig::candidate_labels() const {
  std::vector<std::string> out;
  switch (family) {
    case Family::Mixture:
      for (auto k : components) out.push_back("K=" + std::to_string(k));
      break;
    case Family::Car:
      for (auto v : variants) out.push_back(models::to_string(v));
      break;
    case Family::Seeds:
      out.push_back("seeds");
      break;
  }
  return out;
}

void RunConfig::validate() const {
  if (methods.empty()) fail("'methods' must list at least one evaluator");
  const auto& known = target == StudyTarget::Criteria ? kCriterionMethods : kPValueMethods;
  std::set<std::string> seen;
  for (const auto& m : methods) {
    if (std::find(known.begin(), known.end(), m) == known.end())
      fail("method '" + m + "' is not available for " +
           (target == StudyTarget::Criteria ? "criteria" : "p-values"));
    if (!seen.insert(m).second) fail("method '" + m + "' listed twice");
  }
  if (n_candidates() == 0) fail("no candidate models");
  if (family == Family::Mixture)
    for (auto k : components)
      if (k == 0) fail("component counts must be positive");
  if (replications == 0) fail("'replications' must be positive");
  if (integration_draws == 0 || eval_draws == 0) fail("integration draws must be positive");
  if (ttest_draws == 0) fail("'ttest_draws' must be positive");
  try {
    chain.validate();
  } catch (const std::exception& e) {
    fail(e.what());
  }
  if (chain.n_chains * chain.retained_per_chain() < 100)
    fail("chains retain " + std::to_string(chain.n_chains * chain.retained_per_chain()) +
         " draws; at least 100 are required");
  if (source == DataSource::Simulated && family == Family::Car)
    fail("simulated data is available for the mixture and seeds models only");
  if (family == Family::Seeds && simulation_theta.size() != 5)
    fail("'theta' needs (a0, a1, a2, a12, sigma2)");
  if (family == Family::Seeds && simulation_theta.size() == 5 && !(simulation_theta[4] > 0.0))
    fail("simulation sigma2 must be positive");
  if (source == DataSource::Simulated && family == Family::Mixture && simulated_units < 2)
    fail("'units' must be at least 2");
  const bool needs_galaxy = family == Family::Mixture && source == DataSource::Observed;
  if (needs_galaxy && galaxy_path.empty()) fail("[data] galaxy path is required");
  if (family == Family::Car && (lipcancer_path.empty() || adjacency_path.empty()))
    fail("[data] lipcancer and adjacency paths are required");
  if (family == Family::Seeds && seeds_path.empty()) fail("[data] seeds path is required");
  if (scatter_unit > 0 && family != Family::Mixture) fail("'scatter_unit' applies to the mixture model only");
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const CliOverrides& overrides) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " at line " << e.source().begin.line;
    fail(msg.str());
  }
  check_keys(root, "",
             {"model", "components", "variants", "methods", "target", "seed", "out", "replications",
              "actual_cv", "integration_draws", "eval_draws", "ttest_draws", "scatter_unit", "spill",
              "data", "chain", "prior", "full_scale"});

  RunConfig cfg;
  cfg.source_text = text;
  const auto model = get_string(root, "model");
  if (!model) fail("'model' is required (mixture, car or seeds)");
  if (*model == "mixture")
    cfg.family = Family::Mixture;
  else if (*model == "car")
    cfg.family = Family::Car;
  else if (*model == "seeds")
    cfg.family = Family::Seeds;
  else
    fail("unknown model '" + *model + "'");

  if (const auto* a = get_array(root, "components")) {
    cfg.components.clear();
    for (const auto& e : *a) {
      const auto v = e.value<std::int64_t>();
      if (!v || *v <= 0) fail("'components' must hold positive integers");
      cfg.components.push_back(static_cast<std::size_t>(*v));
    }
  }
  if (const auto* a = get_array(root, "variants")) {
    cfg.variants.clear();
    for (const auto& name : string_array(*a, "variants")) {
      try {
        cfg.variants.push_back(models::parse_car_variant(name));
      } catch (const std::exception& e) {
        fail(e.what());
      }
    }
  }

  cfg.target = cfg.family == Family::Seeds ? StudyTarget::PValues : StudyTarget::Criteria;
  if (auto t = get_string(root, "target")) {
    if (*t == "criteria")
      cfg.target = StudyTarget::Criteria;
    else if (*t == "pvalues")
      cfg.target = StudyTarget::PValues;
    else
      fail("'target' must be criteria or pvalues");
  }
  if (const auto* a = get_array(root, "methods")) {
    cfg.methods = string_array(*a, "methods");
  } else {
    cfg.methods = cfg.target == StudyTarget::Criteria ? kCriterionMethods : kPValueMethods;
  }

  if (auto v = get_int(root, "seed")) cfg.seed = static_cast<std::uint64_t>(*v);
  if (auto v = get_string(root, "out")) cfg.out_dir = *v;
  if (auto v = get_count(root, "replications")) cfg.replications = *v;
  cfg.actual_cv = cfg.target == StudyTarget::PValues;
  if (auto v = get_bool(root, "actual_cv")) cfg.actual_cv = *v;
  cfg.integration_draws = cfg.family == Family::Car ? 200 : 30;
  if (auto v = get_count(root, "integration_draws")) cfg.integration_draws = *v;
  cfg.eval_draws = cfg.integration_draws;
  if (auto v = get_count(root, "eval_draws")) cfg.eval_draws = *v;
  if (auto v = get_count(root, "ttest_draws")) cfg.ttest_draws = *v;
  if (auto v = get_count(root, "scatter_unit")) cfg.scatter_unit = *v;
  if (auto v = get_bool(root, "spill")) cfg.spill = *v;

  if (const auto* data = subtable(root, "data")) {
    check_keys(*data, "data",
               {"source", "galaxy", "lipcancer", "adjacency", "adjacency_policy", "seeds", "units",
                "theta", "covariate_scale"});
    if (auto s = get_string(*data, "source")) {
      if (*s == "observed")
        cfg.source = DataSource::Observed;
      else if (*s == "simulated")
        cfg.source = DataSource::Simulated;
      else
        fail("[data] source must be observed or simulated");
    }
    if (auto s = get_string(*data, "galaxy")) cfg.galaxy_path = resolve(base_dir, *s);
    if (auto s = get_string(*data, "lipcancer")) cfg.lipcancer_path = resolve(base_dir, *s);
    if (auto s = get_string(*data, "adjacency")) cfg.adjacency_path = resolve(base_dir, *s);
    if (auto s = get_string(*data, "seeds")) cfg.seeds_path = resolve(base_dir, *s);
    if (auto s = get_string(*data, "adjacency_policy")) {
      if (*s == "strict")
        cfg.adjacency_policy = AdjacencyPolicy::Strict;
      else if (*s == "symmetrize")
        cfg.adjacency_policy = AdjacencyPolicy::Symmetrize;
      else
        fail("[data] adjacency_policy must be strict or symmetrize");
    }
    if (auto v = get_count(*data, "units")) cfg.simulated_units = *v;
    if (const auto* a = get_array(*data, "theta")) cfg.simulation_theta = real_array(*a, "theta");
    if (auto v = get_real(*data, "covariate_scale")) cfg.covariate_scale = *v;
  }

  if (const auto* prior = subtable(root, "prior")) {
    check_keys(*prior, "prior",
               {"centre_on_data", "mean", "variance", "shape", "scale", "coef_variance",
                "tau_shape", "tau_scale", "sigma_shape", "sigma_scale"});
    if (get_bool(*prior, "centre_on_data").value_or(cfg.source == DataSource::Simulated))
      cfg.mixture_prior.reset();
    if (cfg.mixture_prior) {
      if (auto v = get_real(*prior, "mean")) cfg.mixture_prior->mean = *v;
      if (auto v = get_real(*prior, "variance")) cfg.mixture_prior->variance = *v;
      if (auto v = get_real(*prior, "shape")) cfg.mixture_prior->shape = *v;
      if (auto v = get_real(*prior, "scale")) cfg.mixture_prior->scale = *v;
    }
    if (auto v = get_real(*prior, "coef_variance")) {
      cfg.car_prior.coef_variance = *v;
      cfg.seeds_prior.coef_variance = *v;
    }
    if (auto v = get_real(*prior, "tau_shape")) cfg.car_prior.tau_shape = *v;
    if (auto v = get_real(*prior, "tau_scale")) cfg.car_prior.tau_scale = *v;
    if (auto v = get_real(*prior, "sigma_shape")) cfg.seeds_prior.sigma_shape = *v;
    if (auto v = get_real(*prior, "sigma_scale")) cfg.seeds_prior.sigma_scale = *v;
  } else if (cfg.family == Family::Mixture && cfg.source == DataSource::Simulated) {
    cfg.mixture_prior.reset();
  }

  if (const auto* chain = subtable(root, "chain")) read_chain(*chain, "chain", cfg.chain);

  const auto* full = subtable(root, "full_scale");
  if (full) check_keys(*full, "full_scale", {"replications", "chain"});
  if (overrides.full_scale) {
    cfg.full_scale = true;
    const std::size_t threads = cfg.chain.threads;
    full_scale_defaults(cfg.family, cfg.chain, cfg.replications);
    cfg.chain.threads = threads;
    if (full) {
      if (auto v = get_count(*full, "replications")) cfg.replications = *v;
      if (const auto* chain = subtable(*full, "chain")) read_chain(*chain, "full_scale.chain", cfg.chain);
    }
  }

  if (overrides.seed) cfg.seed = *overrides.seed;
  if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
  cfg.chain.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path, const CliOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path(), overrides);
}

}  // namespace cveval::io
