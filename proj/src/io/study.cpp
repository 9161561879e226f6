#include "cveval/io/study.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <tuple>

#include "cveval/error.hpp"
#include "cveval/eval/evaluators.hpp"
#include "cveval/io/datasets.hpp"
#include "cveval/models/car.hpp"
#include "cveval/models/mixture.hpp"
#include "cveval/models/seeds.hpp"

namespace cveval::io {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool wants(const RunConfig& config, const char* method) {
  return std::find(config.methods.begin(), config.methods.end(), method) != config.methods.end();
}

std::size_t parse_count(const std::string& text, const char* what) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || text.empty())
    throw LoadError(std::string("bad ") + what + " '" + text + "'");
  return static_cast<std::size_t>(v);
}

void require_header(const Table& table, const std::vector<std::string>& header) {
  if (table.header != header) throw LoadError("unexpected record table header");
}

// Per-unit values keyed by (replication, model, method), in unit order.
using UnitKey = std::tuple<std::size_t, std::string, std::string>;

std::map<UnitKey, std::vector<std::optional<double>>> group_units(const StudyResult& result) {
  std::map<UnitKey, std::vector<std::optional<double>>> out;
  for (const auto& r : result.units) {
    auto& slot = out[{r.replication, r.model, r.method}];
    if (slot.empty()) slot.resize(result.n_units);
    if (r.unit == 0 || r.unit > result.n_units) throw ArgumentError("unit record outside 1..n");
    slot[r.unit - 1] = r.value;
  }
  return out;
}

std::optional<std::vector<double>> complete(const std::vector<std::optional<double>>& values) {
  std::vector<double> out;
  for (const auto& v : values) {
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

std::string label_of(const StudyResult& result, std::size_t m) { return result.models.at(m); }

}  // namespace

Dataset load_observed(const RunConfig& config, std::vector<std::string>* warnings) {
  Dataset data;
  switch (config.family) {
    case Family::Mixture:
      if (config.source == DataSource::Observed) data.galaxy = load_galaxy(config.galaxy_path);
      break;
    case Family::Car:
      data.lipcancer = load_lipcancer(config.lipcancer_path, config.adjacency_path, kLipCancerCount,
                                      config.adjacency_policy, warnings);
      for (auto& x : data.lipcancer.covariate) x *= config.covariate_scale;
      break;
    case Family::Seeds:
      data.seeds = load_seeds(config.seeds_path);
      break;
  }
  return data;
}

Dataset replication_dataset(const RunConfig& config, const Dataset& observed,
                            std::uint64_t replication_seed) {
  if (config.source == DataSource::Observed) return observed;
  prob::RngStream rng(replication_seed, mcmc::streams::kSimulation);
  Dataset data;
  if (config.family == Family::Mixture) {
    data.galaxy = models::mixture_simulate(config.simulated_units, rng);
  } else if (config.family == Family::Seeds) {
    data.seeds = models::SeedsModel::simulate(observed.seeds, config.simulation_theta, rng);
  } else {
    throw ConfigurationError("no simulator for " + to_string(config.family));
  }
  return data;
}

Table dataset_table(const RunConfig& config, const Dataset& data) {
  Table t;
  switch (config.family) {
    case Family::Mixture:
      t.header = {"y"};
      for (double y : data.galaxy) t.rows.push_back({format_real(y)});
      break;
    case Family::Car: {
      t.header = {"district", "y", "E", "x"};
      const auto& d = data.lipcancer;
      for (std::size_t i = 0; i < d.size(); ++i)
        t.rows.push_back({std::to_string(i + 1), std::to_string(d.y[i]), format_real(d.expected[i]),
                          format_real(d.covariate[i])});
      break;
    }
    case Family::Seeds: {
      t.header = {"r", "n", "x1", "x2"};
      const auto& d = data.seeds;
      for (std::size_t i = 0; i < d.size(); ++i)
        t.rows.push_back({std::to_string(d.r[i]), std::to_string(d.n[i]), std::to_string(d.x1[i]),
                          std::to_string(d.x2[i])});
      break;
    }
  }
  return t;
}

std::unique_ptr<models::LatentModel> build_model(const RunConfig& config, const Dataset& data,
                                                 std::size_t candidate) {
  switch (config.family) {
    case Family::Mixture: {
      const auto prior = config.mixture_prior ? *config.mixture_prior
                                              : models::MixturePrior::from_data(data.galaxy);
      return std::make_unique<models::MixtureModel>(data.galaxy, config.components.at(candidate), prior);
    }
    case Family::Car:
      return std::make_unique<models::CarModel>(data.lipcancer, config.variants.at(candidate),
                                                config.integration_draws, config.car_prior);
    case Family::Seeds:
      return std::make_unique<models::SeedsModel>(data.seeds, config.integration_draws,
                                                  config.seeds_prior);
  }
  throw ConfigurationError("unknown model family");
}

std::uint64_t replication_seed(std::uint64_t master, std::size_t replication) {
  return prob::RngStream(master, mcmc::streams::kReplication).split(replication)();
}

mcmc::ChainConfig candidate_chain(const RunConfig& config, std::uint64_t replication_seed,
                                  std::size_t candidate, std::size_t threads) {
  mcmc::ChainConfig chain = config.chain;
  chain.seed = prob::RngStream(replication_seed, mcmc::streams::kFit).split(candidate)();
  chain.threads = threads;
  return chain;
}

prob::RngStream evaluation_stream(std::uint64_t replication_seed, std::size_t candidate) {
  return prob::RngStream(replication_seed, mcmc::streams::kEvaluation).split(candidate);
}

std::vector<UnitValue> evaluate_criteria(const RunConfig& config, const models::LatentModel& model,
                                         const mcmc::SampleStore& store, const prob::RngStream& rng,
                                         std::size_t threads) {
  const std::size_t n = model.n_units();
  const bool integrated = wants(config, "iis") || wants(config, "iwaic");
  std::vector<std::map<std::string, eval::PerUnitEvaluation>> per_unit(n);
  mcmc::parallel_for(n, threads, [&](std::size_t i) {
    auto& slot = per_unit[i];
    if (integrated) {
      const auto all = eval::log_ppd_approximations(store, model, i, rng.split(i));
      slot = {{"nis", all.nis}, {"iis", all.iis}, {"nwaic", all.nwaic}, {"iwaic", all.iwaic}};
    } else {
      slot = {{"nis", eval::nis_ppd(store, model, i)}, {"nwaic", eval::nwaic_ppd(store, model, i)}};
    }
  });
  std::vector<UnitValue> out;
  for (const auto& method : config.methods) {
    if (method == "dic") continue;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& e = per_unit[i].at(method);
      out.push_back({method, i, e.value, e.mc_se});
    }
  }
  return out;
}

std::vector<UnitValue> evaluate_pvalues(const RunConfig& config, const models::LatentModel& model,
                                        const mcmc::SampleStore& store, const prob::RngStream& rng,
                                        std::size_t threads) {
  const std::size_t n = model.n_units();
  const auto midp = eval::EvalFunction::midp();
  std::vector<std::vector<UnitValue>> per_unit(n);
  mcmc::parallel_for(n, threads, [&](std::size_t i) {
    for (const auto& method : config.methods) {
      eval::PerUnitEvaluation e;
      if (method == "posterior-check")
        e = eval::posterior_check_pvalue(store, model, i, midp);
      else if (method == "ghosting")
        e = eval::ghosting_pvalue(store, model, i, midp, config.eval_draws, rng.split(i));
      else if (method == "nis")
        e = eval::is_expectation(store, model, i, midp);
      else if (method == "iis")
        e = eval::iis_expectation(store, model, i, midp, config.eval_draws, rng.split(i));
      else
        throw ConfigurationError("no p-value method '" + method + "'");
      per_unit[i].push_back({method, i, e.value, e.mc_se});
    }
  });
  std::vector<UnitValue> out;
  for (std::size_t m = 0; m < config.methods.size(); ++m)
    for (std::size_t i = 0; i < n; ++i) out.push_back(per_unit[i][m]);
  return out;
}

ActualCv run_actual_cv(const models::LatentModel& model, const mcmc::ChainConfig& chain,
                       const std::function<void(std::size_t, const mcmc::SampleStore&)>& inspect) {
  const std::size_t n = model.n_units();
  ActualCv out;
  out.log_ppd.assign(n, kNaN);
  out.log_ppd_se.assign(n, kNaN);
  out.midp.assign(n, kNaN);
  out.midp_se.assign(n, kNaN);
  const auto midp = eval::EvalFunction::midp();
  out.report = mcmc::actual_cv_run(model, chain, [&](std::size_t i, const mcmc::SampleStore& store) {
    const auto lp = eval::actual_cv_log_ppd(store, model, i);
    const auto p = eval::actual_cv_expectation(store, model, i, midp);
    out.log_ppd[i] = lp.value;
    out.log_ppd_se[i] = lp.mc_se;
    out.midp[i] = p.value;
    out.midp_se[i] = p.mc_se;
    if (inspect) inspect(i, store);
  });
  return out;
}

StudyResult run_study(const RunConfig& config, std::vector<std::string>* warnings) {
  config.validate();
  const Dataset observed = load_observed(config, warnings);
  const std::size_t M = config.replications;
  const std::size_t C = config.n_candidates();
  const std::size_t threads = mcmc::resolve_threads(config.chain.threads);
  const std::size_t outer = M > 1 ? threads : 1;
  const std::size_t inner = M > 1 ? 1 : threads;
  const bool criteria = config.target == StudyTarget::Criteria;
  const char* actual_name = criteria ? kActualMethod : kActualPValue;

  StudyResult result;
  result.target = config.target;
  result.replications = M;
  result.models = config.candidate_labels();
  result.shared_data = config.source == DataSource::Observed;
  for (const auto& m : config.methods) result.methods.push_back(m);
  if (criteria && config.actual_cv) result.methods.push_back(kActualMethod);

  auto actual_records = [&](const ActualCv& cv, std::size_t rep, std::size_t c,
                            std::vector<UnitRecord>& into) {
    const auto& values = criteria ? cv.log_ppd : cv.midp;
    const auto& ses = criteria ? cv.log_ppd_se : cv.midp_se;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!std::isnan(values[i]))
        into.push_back({rep + 1, result.models[c], actual_name, i + 1, values[i], ses[i]});
  };

  // Observed data: one set of refits, shared by every replication.
  std::vector<ActualCv> shared_cv;
  std::vector<std::string> shared_failures;
  if (config.actual_cv && result.shared_data) {
    const auto seed0 = replication_seed(config.seed, 0);
    for (std::size_t c = 0; c < C; ++c) {
      const auto model = build_model(config, observed, c);
      shared_cv.push_back(run_actual_cv(*model, candidate_chain(config, seed0, c, threads)));
      for (const auto& msg : shared_cv.back().report.messages)
        shared_failures.push_back(result.models[c] + " actual CV " + msg);
    }
  }

  struct Replication {
    std::vector<UnitRecord> units;
    std::vector<ScalarRecord> model_level;
    std::vector<std::string> failures;
    std::size_t n_units = 0;
  };
  std::vector<Replication> reps(M);
  mcmc::parallel_for(M, outer, [&](std::size_t r) {
    auto& out = reps[r];
    try {
      const auto seed = replication_seed(config.seed, r);
      const Dataset data = replication_dataset(config, observed, seed);
      for (std::size_t c = 0; c < C; ++c) {
        const auto model = build_model(config, data, c);
        out.n_units = model->n_units();
        const auto chain = candidate_chain(config, seed, c, inner);
        const auto store = mcmc::run_chains(*model, chain);
        const auto rng = evaluation_stream(seed, c);
        const auto values = criteria ? evaluate_criteria(config, *model, store, rng, inner)
                                     : evaluate_pvalues(config, *model, store, rng, inner);
        for (const auto& v : values)
          out.units.push_back({r + 1, result.models[c], v.method, v.unit + 1, v.value, v.mc_se});
        if (criteria && wants(config, "dic"))
          out.model_level.push_back({r + 1, result.models[c], "dic", eval::dic(store, *model).dic});
        if (!config.actual_cv) continue;
        if (result.shared_data) {
          actual_records(shared_cv[c], r, c, out.units);
        } else {
          const auto cv = run_actual_cv(*model, chain);
          actual_records(cv, r, c, out.units);
          for (const auto& msg : cv.report.messages)
            out.failures.push_back("replication " + std::to_string(r + 1) + " " + result.models[c] +
                                   " actual CV " + msg);
        }
      }
    } catch (const std::exception& e) {
      out.units.clear();
      out.model_level.clear();
      out.failures = {"replication " + std::to_string(r + 1) + ": " + e.what()};
    }
  });

  result.failures = shared_failures;
  for (auto& rep : reps) {
    result.n_units = std::max(result.n_units, rep.n_units);
    result.units.insert(result.units.end(), rep.units.begin(), rep.units.end());
    result.model_level.insert(result.model_level.end(), rep.model_level.begin(), rep.model_level.end());
    result.failures.insert(result.failures.end(), rep.failures.begin(), rep.failures.end());
  }
  return result;
}

std::vector<ScalarRecord> aggregate(const StudyResult& result) {
  std::vector<ScalarRecord> out;
  const auto groups = group_units(result);
  for (std::size_t r = 1; r <= result.replications; ++r) {
    for (const auto& model : result.models) {
      if (result.target == StudyTarget::Criteria) {
        for (const auto& method : result.methods) {
          const auto it = groups.find({r, model, method});
          if (it == groups.end()) continue;
          if (const auto values = complete(it->second))
            out.push_back({r, model, method, eval::ic_from_units(*values)});
        }
      } else {
        const auto actual = groups.find({r, model, kActualPValue});
        if (actual == groups.end()) continue;
        const auto truth = complete(actual->second);
        if (!truth) continue;
        for (const auto& method : result.methods) {
          const auto it = groups.find({r, model, method});
          if (it == groups.end()) continue;
          const auto values = complete(it->second);
          if (!values) continue;
          try {
            out.push_back({r, model, method, eval::relative_error(*values, *truth)});
          } catch (const ArgumentError&) {
            // An actual p-value of exactly 0 or 1 leaves RE undefined.
          }
        }
      }
    }
  }
  out.insert(out.end(), result.model_level.begin(), result.model_level.end());
  std::stable_sort(out.begin(), out.end(), [&](const ScalarRecord& a, const ScalarRecord& b) {
    return a.replication < b.replication;
  });
  return out;
}

Table results_table(const StudyResult& result) {
  const auto scalars = aggregate(result);
  Table t;
  t.header = {"model"};
  for (const auto& m : result.methods) {
    t.header.push_back(m + "_mean");
    t.header.push_back(m + "_sd");
    t.header.push_back(m + "_m");
  }
  for (const auto& model : result.models) {
    std::vector<std::string> row{model};
    for (const auto& method : result.methods) {
      std::vector<double> v;
      for (const auto& s : scalars)
        if (s.model == model && s.method == method) v.push_back(s.value);
      if (v.empty()) {
        row.insert(row.end(), {"", "", "0"});
        continue;
      }
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      std::string sd;
      if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        sd = format_real(std::sqrt(ss / static_cast<double>(v.size() - 1)));
      }
      row.push_back(format_real(mean));
      row.push_back(sd);
      row.push_back(std::to_string(v.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table selection_table(const StudyResult& result) {
  const auto scalars = aggregate(result);
  Table t;
  t.header = {"model"};
  for (const auto& m : result.methods) t.header.push_back(m);
  std::vector<std::vector<std::size_t>> counts(result.models.size(),
                                               std::vector<std::size_t>(result.methods.size(), 0));
  for (std::size_t r = 1; r <= result.replications; ++r) {
    for (std::size_t k = 0; k < result.methods.size(); ++k) {
      std::vector<std::optional<double>> ic(result.models.size());
      for (const auto& s : scalars)
        if (s.replication == r && s.method == result.methods[k])
          for (std::size_t m = 0; m < result.models.size(); ++m)
            if (s.model == result.models[m]) ic[m] = s.value;
      if (std::any_of(ic.begin(), ic.end(), [](const auto& v) { return !v; })) continue;
      std::size_t best = 0;
      for (std::size_t m = 1; m < ic.size(); ++m)
        if (*ic[m] < *ic[best]) best = m;
      ++counts[best][k];
    }
  }
  for (std::size_t m = 0; m < result.models.size(); ++m) {
    std::vector<std::string> row{label_of(result, m)};
    for (auto c : counts[m]) row.push_back(std::to_string(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table ttest_table(const StudyResult& result, std::size_t draws, std::uint64_t master_seed) {
  const auto groups = group_units(result);
  std::vector<std::string> methods;
  for (const auto& m : result.methods)
    if (m != "dic") methods.push_back(m);
  Table t;
  t.header = {"comparison"};
  t.header.insert(t.header.end(), methods.begin(), methods.end());
  const prob::RngStream pairing(master_seed, mcmc::streams::kPairing);
  for (std::size_t c = 1; c < result.models.size(); ++c) {
    std::vector<std::string> row{result.models[c] + " vs " + result.models[c - 1]};
    for (const auto& method : methods) {
      std::vector<std::vector<double>> mine, theirs;
      std::vector<std::pair<std::vector<double>, std::vector<double>>> paired;
      for (std::size_t r = 1; r <= result.replications; ++r) {
        std::optional<std::vector<double>> a, b;
        if (auto it = groups.find({r, result.models[c], method}); it != groups.end()) a = complete(it->second);
        if (auto it = groups.find({r, result.models[c - 1], method}); it != groups.end())
          b = complete(it->second);
        if (a) mine.push_back(*a);
        if (b) theirs.push_back(*b);
        if (a && b) paired.emplace_back(*a, *b);
      }
      if (result.shared_data) {
        // Same data in every run: pair independent runs at random.
        if (mine.empty() || theirs.empty()) {
          row.push_back("");
          continue;
        }
        row.push_back(format_real(eval::ttest_replication_average(mine, theirs, draws, pairing.split(c))));
      } else {
        // Each replication has its own data: pair within a replication.
        if (paired.empty()) {
          row.push_back("");
          continue;
        }
        double acc = 0.0;
        for (const auto& [a, b] : paired) acc += eval::paired_onesided_ttest(a, b);
        row.push_back(format_real(acc / static_cast<double>(paired.size())));
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table unit_records_table(const std::vector<UnitRecord>& records) {
  Table t;
  t.header = {"replication", "model", "method", "unit", "value", "mc_se"};
  for (const auto& r : records)
    t.rows.push_back({std::to_string(r.replication), r.model, r.method, std::to_string(r.unit),
                      format_real(r.value), format_real(r.mc_se)});
  return t;
}

std::vector<UnitRecord> unit_records_from(const Table& table) {
  require_header(table, {"replication", "model", "method", "unit", "value", "mc_se"});
  std::vector<UnitRecord> out;
  for (const auto& row : table.rows)
    out.push_back({parse_count(row[0], "replication"), row[1], row[2], parse_count(row[3], "unit"),
                   parse_real(row[4]), parse_real(row[5])});
  return out;
}

Table scalar_records_table(const std::vector<ScalarRecord>& records) {
  Table t;
  t.header = {"replication", "model", "method", "value"};
  for (const auto& r : records)
    t.rows.push_back({std::to_string(r.replication), r.model, r.method, format_real(r.value)});
  return t;
}

std::vector<ScalarRecord> scalar_records_from(const Table& table) {
  require_header(table, {"replication", "model", "method", "value"});
  std::vector<ScalarRecord> out;
  for (const auto& row : table.rows)
    out.push_back({parse_count(row[0], "replication"), row[1], row[2], parse_real(row[3])});
  return out;
}

}  // namespace cveval::io
