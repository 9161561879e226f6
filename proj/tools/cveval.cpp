#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cveval/io/commands.hpp"
#include "cveval/io/config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cross-validatory evaluation of Bayesian latent variable models"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool full_scale = false;

  const std::vector<std::pair<std::string, std::string>> help{
      {"simulate", "Write simulated data sets"},
      {"fit", "Run the full-data chains and write parameter summaries"},
      {"criteria", "Approximate per-unit log predictive densities and information criteria"},
      {"loocv", "Leave-one-out refits: actual CV predictive densities and mid-p values"},
      {"pvalues", "Estimated CV p-values against the actual ones"},
      {"study", "Replicated runs with mean(sd) and model-selection tables"}};
  for (const auto& [name, text] : help) {
    auto* sub = app.add_subcommand(name, text);
    sub->add_option("--config", config_path, "TOML run file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Master seed (overrides the file)");
    sub->add_option("--out", out_dir, "Output directory (overrides the file)");
    sub->add_flag("--full-scale", full_scale, "Long chains and 100 replications");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    cveval::io::CliOverrides overrides;
    overrides.seed = seed;
    if (out_dir) overrides.out_dir = *out_dir;
    overrides.full_scale = full_scale;
    const auto config = cveval::io::load_run_config(config_path, overrides);
    const auto info = cveval::io::run_subcommand(name, config, std::cerr);
    for (const auto& w : info.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& f : info.files) std::cout << (config.out_dir / f).string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "cveval " << name << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
