#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "cveval/io/config.hpp"
#include "cveval/io/output.hpp"

namespace cveval::io {

inline const std::vector<std::string> kSubcommands{"simulate", "fit",     "criteria",
                                                   "loocv",    "pvalues", "study"};

// Runs one subcommand, writing its CSV files and manifest.json into
// config.out_dir. Progress goes to `log`; nothing in the output files depends
// on timing or thread count.
ManifestInfo run_subcommand(const std::string& name, const RunConfig& config, std::ostream& log);

}  // namespace cveval::io
