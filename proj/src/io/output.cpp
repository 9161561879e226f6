#include "cveval/io/output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "cveval/error.hpp"
#include "cveval/eval/evaluators.hpp"

namespace cveval::io {

namespace {

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted) throw LoadError("line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(field);
  return out;
}

void ensure_parent(const std::filesystem::path& path) {
  const auto dir = path.parent_path();
  if (dir.empty()) return;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

const char* policy_name(AdjacencyPolicy p) {
  return p == AdjacencyPolicy::Strict ? "strict" : "symmetrize";
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", value);
}

double parse_real(const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw LoadError("not a number: '" + text + "'");
  return v;
}

void write_csv(const std::filesystem::path& path, const Table& table) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << quote(row[k]);
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw ArgumentError("write_csv: row width differs from header in " + path.string());
    write_row(row);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Table table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_record(line, line_no);
    if (line_no == 1) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      throw LoadError(path.string() + " line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
  }
  if (line_no == 0) throw LoadError(path.string() + ": empty file");
  return table;
}

void write_manifest(const std::filesystem::path& path, const RunConfig& config,
                    const ManifestInfo& info) {
  using nlohmann::json;
  json j;
  j["tool"] = "cveval";
  j["subcommand"] = info.subcommand;
  j["master_seed"] = config.seed;
  j["dic_convention"] = eval::kDicConvention;
  j["model"] = to_string(config.family);
  j["candidates"] = config.candidate_labels();
  j["methods"] = config.methods;
  j["data_source"] = config.source == DataSource::Observed ? "observed" : "simulated";
  j["adjacency_policy"] = policy_name(config.adjacency_policy);
  j["covariate_scale"] = config.covariate_scale;
  j["integration_draws"] = config.integration_draws;
  j["eval_draws"] = config.eval_draws;
  j["replications"] = config.replications;
  j["actual_cv"] = config.actual_cv;
  j["full_scale"] = config.full_scale;
  j["chain"] = {{"chains", config.chain.n_chains},
                {"adapt", config.chain.n_adapt},
                {"burn", config.chain.n_burn},
                {"sample", config.chain.n_sample},
                {"thin", config.chain.thin}};
  j["stream_ids"] = {{"fit", mcmc::streams::kFit},
                     {"holdout", mcmc::streams::kHoldout},
                     {"evaluation", mcmc::streams::kEvaluation},
                     {"simulation", mcmc::streams::kSimulation},
                     {"replication", mcmc::streams::kReplication},
                     {"pairing", mcmc::streams::kPairing}};
  j["files"] = info.files;
  j["warnings"] = info.warnings;
  j["config_text"] = config.source_text;

  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace cveval::io
