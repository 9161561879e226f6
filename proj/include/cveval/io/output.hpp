#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cveval/io/config.hpp"

namespace cveval::io {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  bool operator==(const Table&) const = default;
};

// Shortest text that parses back to the same double ("{:.17g}").
std::string format_real(double value);
double parse_real(const std::string& text);

// UTF-8 CSV with a header row. Fields holding commas or quotes are quoted.
void write_csv(const std::filesystem::path& path, const Table& table);
Table read_csv(const std::filesystem::path& path);

struct ManifestInfo {
  std::string subcommand;
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

// JSON record of the run: config, master seed, DIC convention, outputs.
// Holds nothing that changes between identical runs.
void write_manifest(const std::filesystem::path& path, const RunConfig& config,
                    const ManifestInfo& info);

}  // namespace cveval::io
