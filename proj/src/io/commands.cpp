#include "cveval/io/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "cveval/error.hpp"
#include "cveval/eval/evaluators.hpp"
#include "cveval/io/study.hpp"
#include "cveval/mcmc/diagnostics.hpp"
#include "cveval/mcmc/spill.hpp"
#include "cveval/models/mixture.hpp"

namespace cveval::io {

namespace {

// File-name fragment for a candidate label ("K=5" -> "K5").
std::string file_tag(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += c;
    else if (c == '+' || c == '-' || c == '_')
      out += '_';
  }
  return out;
}

struct Context {
  const RunConfig& config;
  std::ostream& log;
  ManifestInfo info;
  std::size_t threads;

  void write(const std::string& name, const Table& table) {
    write_csv(config.out_dir / name, table);
    info.files.push_back(name);
  }
};

void require_target(const RunConfig& config, StudyTarget target, const std::string& name) {
  if (config.target != target)
    throw ConfigurationError(name + " needs target = \"" +
                             (target == StudyTarget::Criteria ? "criteria" : "pvalues") + "\"");
}

void append_scatter(Table& table, const std::string& label, const char* posterior,
                    const models::LatentModel& model, const mcmc::SampleStore& store, std::size_t unit) {
  const auto* mixture = dynamic_cast<const models::MixtureModel*>(&model);
  if (!mixture) return;
  for (std::size_t s = 0; s < store.size(); ++s) {
    const auto row = store.row(s);
    table.rows.push_back({label, posterior, std::to_string(s + 1),
                          format_real(mixture->assigned_mean(unit, row)),
                          format_real(model.nonint_logpred(unit, row))});
  }
}

Table scatter_table() { return Table{{"model", "posterior", "draw", "assigned_mean", "log_nonint"}, {}}; }

void cmd_simulate(Context& ctx) {
  const auto& cfg = ctx.config;
  if (cfg.source != DataSource::Simulated)
    throw ConfigurationError("simulate needs [data] source = \"simulated\"");
  const Dataset observed = load_observed(cfg, &ctx.info.warnings);
  for (std::size_t r = 0; r < cfg.replications; ++r) {
    const Dataset data = replication_dataset(cfg, observed, replication_seed(cfg.seed, r));
    ctx.write(fmt::format("simulated_{:03d}.csv", r + 1), dataset_table(cfg, data));
  }
}

void cmd_fit(Context& ctx) {
  const auto& cfg = ctx.config;
  const Dataset observed = load_observed(cfg, &ctx.info.warnings);
  const auto seed = replication_seed(cfg.seed, 0);
  const Dataset data = replication_dataset(cfg, observed, seed);
  Table summary{{"model", "parameter", "mean", "sd", "rhat", "ess"}, {}};
  Table acceptance{{"model", "chain", "block", "rate"}, {}};
  Table scatter = scatter_table();
  const auto labels = cfg.candidate_labels();
  for (std::size_t c = 0; c < cfg.n_candidates(); ++c) {
    ctx.log << "fit " << labels[c] << "\n";
    const auto model = build_model(cfg, data, c);
    mcmc::ChainReport report;
    const auto store = mcmc::run_chains(*model, candidate_chain(cfg, seed, c, ctx.threads), &report);
    for (const auto& col : mcmc::summarize(store))
      summary.rows.push_back({labels[c], col.name, format_real(col.mean), format_real(col.sd),
                              format_real(col.rhat), format_real(col.ess)});
    for (std::size_t ch = 0; ch < report.acceptance.size(); ++ch)
      for (const auto& [block, rate] : report.acceptance[ch])
        acceptance.rows.push_back({labels[c], std::to_string(ch + 1), block, format_real(rate)});
    if (cfg.scatter_unit > 0) {
      if (cfg.scatter_unit > model->n_units()) throw ConfigurationError("scatter_unit exceeds n");
      append_scatter(scatter, labels[c], "full", *model, store, cfg.scatter_unit - 1);
    }
    if (cfg.spill) {
      const std::string name = "draws_" + file_tag(labels[c]) + ".bin";
      mcmc::write_spill(cfg.out_dir / name, store);
      ctx.info.files.push_back(name);
    }
  }
  ctx.write("fit_summary.csv", summary);
  ctx.write("fit_acceptance.csv", acceptance);
  if (cfg.scatter_unit > 0) ctx.write("scatter_full.csv", scatter);
}

void cmd_criteria(Context& ctx) {
  const auto& cfg = ctx.config;
  require_target(cfg, StudyTarget::Criteria, "criteria");
  const Dataset observed = load_observed(cfg, &ctx.info.warnings);
  const auto seed = replication_seed(cfg.seed, 0);
  const Dataset data = replication_dataset(cfg, observed, seed);
  Table units{{"model", "method", "unit", "log_ppd", "mc_se"}, {}};
  Table ics{{"model", "method", "ic"}, {}};
  Table dics{{"model", "dic", "mean_deviance", "p_d", "convention"}, {}};
  const auto labels = cfg.candidate_labels();
  for (std::size_t c = 0; c < cfg.n_candidates(); ++c) {
    ctx.log << "criteria " << labels[c] << "\n";
    const auto model = build_model(cfg, data, c);
    const auto store = mcmc::run_chains(*model, candidate_chain(cfg, seed, c, ctx.threads));
    const auto values = evaluate_criteria(cfg, *model, store, evaluation_stream(seed, c), ctx.threads);
    for (const auto& method : cfg.methods) {
      if (method == "dic") {
        const auto d = eval::dic(store, *model);
        ics.rows.push_back({labels[c], method, format_real(d.dic)});
        dics.rows.push_back({labels[c], format_real(d.dic), format_real(d.mean_deviance),
                             format_real(d.p_d), eval::kDicConvention});
        continue;
      }
      std::vector<double> lp;
      for (const auto& v : values) {
        if (v.method != method) continue;
        lp.push_back(v.value);
        units.rows.push_back({labels[c], method, std::to_string(v.unit + 1), format_real(v.value),
                              format_real(v.mc_se)});
      }
      ics.rows.push_back({labels[c], method, format_real(eval::ic_from_units(lp))});
    }
  }
  ctx.write("criteria_units.csv", units);
  ctx.write("criteria.csv", ics);
  if (!dics.rows.empty()) ctx.write("dic.csv", dics);
}

void cmd_loocv(Context& ctx) {
  const auto& cfg = ctx.config;
  const Dataset observed = load_observed(cfg, &ctx.info.warnings);
  const auto seed = replication_seed(cfg.seed, 0);
  const Dataset data = replication_dataset(cfg, observed, seed);
  Table units{{"model", "unit", "log_ppd", "log_ppd_se", "midp", "midp_se"}, {}};
  Table totals{{"model", "cvic", "failed_units"}, {}};
  Table scatter = scatter_table();
  const auto labels = cfg.candidate_labels();
  for (std::size_t c = 0; c < cfg.n_candidates(); ++c) {
    ctx.log << "loocv " << labels[c] << "\n";
    const auto model = build_model(cfg, data, c);
    if (cfg.scatter_unit > model->n_units()) throw ConfigurationError("scatter_unit exceeds n");
    Table own_scatter = scatter_table();
    const auto cv = run_actual_cv(*model, candidate_chain(cfg, seed, c, ctx.threads),
                                  [&](std::size_t i, const mcmc::SampleStore& store) {
                                    if (i + 1 == cfg.scatter_unit)
                                      append_scatter(own_scatter, labels[c], "cv", *model, store, i);
                                  });
    scatter.rows.insert(scatter.rows.end(), own_scatter.rows.begin(), own_scatter.rows.end());
    for (std::size_t i = 0; i < model->n_units(); ++i)
      units.rows.push_back({labels[c], std::to_string(i + 1), format_real(cv.log_ppd[i]),
                            format_real(cv.log_ppd_se[i]), format_real(cv.midp[i]),
                            format_real(cv.midp_se[i])});
    std::string failed;
    for (auto i : cv.report.failed_units) failed += (failed.empty() ? "" : " ") + std::to_string(i + 1);
    for (const auto& msg : cv.report.messages) ctx.info.warnings.push_back(labels[c] + " " + msg);
    totals.rows.push_back({labels[c], failed.empty() ? format_real(eval::ic_from_units(cv.log_ppd)) : "",
                           failed});
  }
  ctx.write("loocv_units.csv", units);
  ctx.write("loocv.csv", totals);
  if (cfg.scatter_unit > 0) ctx.write("scatter_cv.csv", scatter);
}

void cmd_pvalues(Context& ctx) {
  const auto& cfg = ctx.config;
  require_target(cfg, StudyTarget::PValues, "pvalues");
  const Dataset observed = load_observed(cfg, &ctx.info.warnings);
  const auto seed = replication_seed(cfg.seed, 0);
  const Dataset data = replication_dataset(cfg, observed, seed);
  Table points{{"model", "unit", "method", "actual", "estimated", "mc_se"}, {}};
  Table errors{{"model", "method", "relative_error"}, {}};
  const auto labels = cfg.candidate_labels();
  for (std::size_t c = 0; c < cfg.n_candidates(); ++c) {
    ctx.log << "pvalues " << labels[c] << "\n";
    const auto model = build_model(cfg, data, c);
    const auto chain = candidate_chain(cfg, seed, c, ctx.threads);
    const auto cv = run_actual_cv(*model, chain);
    for (const auto& msg : cv.report.messages) ctx.info.warnings.push_back(labels[c] + " " + msg);
    const auto store = mcmc::run_chains(*model, chain);
    const auto values = evaluate_pvalues(cfg, *model, store, evaluation_stream(seed, c), ctx.threads);
    for (const auto& method : cfg.methods) {
      std::vector<double> est, act;
      for (const auto& v : values) {
        if (v.method != method) continue;
        points.rows.push_back({labels[c], std::to_string(v.unit + 1), method, format_real(cv.midp[v.unit]),
                               format_real(v.value), format_real(v.mc_se)});
        if (std::isnan(cv.midp[v.unit])) continue;
        est.push_back(v.value);
        act.push_back(cv.midp[v.unit]);
      }
      std::string re;
      if (cv.report.complete()) {
        try {
          re = format_real(eval::relative_error(est, act));
        } catch (const ArgumentError& e) {
          ctx.info.warnings.push_back(labels[c] + " " + method + ": " + e.what());
        }
      }
      errors.rows.push_back({labels[c], method, re});
    }
  }
  ctx.write("pvalues_units.csv", points);
  ctx.write("pvalues.csv", errors);
}

void cmd_study(Context& ctx) {
  const auto& cfg = ctx.config;
  ctx.log << "study: " << cfg.replications << " replications\n";
  const auto result = run_study(cfg, &ctx.info.warnings);
  ctx.info.warnings.insert(ctx.info.warnings.end(), result.failures.begin(), result.failures.end());
  ctx.write("study_records.csv", unit_records_table(result.units));
  ctx.write("study_model_level.csv", scalar_records_table(result.model_level));
  ctx.write("study_scalars.csv", scalar_records_table(aggregate(result)));
  ctx.write("study_table.csv", results_table(result));
  if (result.target == StudyTarget::Criteria) {
    ctx.write("study_selection.csv", selection_table(result));
    if (result.models.size() > 1) ctx.write("study_ttest.csv", ttest_table(result, cfg.ttest_draws, cfg.seed));
  }
}

}  // namespace

ManifestInfo run_subcommand(const std::string& name, const RunConfig& config, std::ostream& log) {
  config.validate();
  Context ctx{config, log, {}, mcmc::resolve_threads(config.chain.threads)};
  ctx.info.subcommand = name;
  if (name == "simulate")
    cmd_simulate(ctx);
  else if (name == "fit")
    cmd_fit(ctx);
  else if (name == "criteria")
    cmd_criteria(ctx);
  else if (name == "loocv")
    cmd_loocv(ctx);
  else if (name == "pvalues")
    cmd_pvalues(ctx);
  else if (name == "study")
    cmd_study(ctx);
  else
    throw ConfigurationError("unknown subcommand '" + name + "'");
  ctx.info.files.push_back("manifest.json");
  write_manifest(config.out_dir / "manifest.json", config, ctx.info);
  return ctx.info;
}

}  // namespace cveval::io
