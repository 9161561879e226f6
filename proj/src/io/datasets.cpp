#include "cveval/io/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cveval/error.hpp"

namespace cveval::io {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

Table read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  Table t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(line_no);
  }
  if (t.header.empty()) throw LoadError(path.string() + ": empty file");
  return t;
}

std::size_t column(const Table& t, const std::filesystem::path& path, const std::string& name) {
  const auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) throw LoadError(path.string() + ": missing column '" + name + "'");
  return static_cast<std::size_t>(it - t.header.begin());
}

template <class T>
T parse_number(const std::string& text, const std::filesystem::path& path, std::size_t line_no) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw LoadError(path.string() + ":" + std::to_string(line_no) + ": cannot parse '" + text + "'");
  return value;
}

void check_count(const std::filesystem::path& path, std::size_t found,
                 std::optional<std::size_t> expected, const char* unit) {
  if (found == 0) throw LoadError(path.string() + ": no data rows");
  if (expected && found != *expected)
    throw LoadError(path.string() + ": expected " + std::to_string(*expected) + " " + unit +
                    ", found " + std::to_string(found));
}

}  // namespace

std::vector<double> load_galaxy(const std::filesystem::path& path,
                                std::optional<std::size_t> expected, double divisor) {
  const Table t = read_csv(path);
  const std::size_t c = column(t, path, "velocity");
  check_count(path, t.rows.size(), expected, "galaxies");
  std::vector<double> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    out.push_back(parse_number<double>(t.rows[r][c], path, t.line_numbers[r]) / divisor);
  return out;
}

std::vector<std::vector<std::size_t>> load_adjacency(const std::filesystem::path& path,
                                                     std::size_t n, AdjacencyPolicy policy,
                                                     std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<std::set<std::size_t>> sets(n);
  std::vector<bool> seen(n, false);
  std::string line;
  std::size_t line_no = 0;
  auto district = [&](const std::string& text) {
    const auto id = parse_number<std::size_t>(text, path, line_no);
    if (id < 1 || id > n)
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": district " + text +
                      " outside 1.." + std::to_string(n));
    return id - 1;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos)
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": missing ':'");
    const std::size_t i = district(trim(line.substr(0, colon)));
    if (seen[i])
      throw LoadError(path.string() + ":" + std::to_string(line_no) + ": district " +
                      std::to_string(i + 1) + " listed twice");
    seen[i] = true;
    std::istringstream rest(line.substr(colon + 1));
    std::string token;
    while (rest >> token) {
      const std::size_t j = district(token);
      if (j == i)
        throw LoadError(path.string() + ":" + std::to_string(line_no) + ": district " +
                        std::to_string(i + 1) + " lists itself");
      sets[i].insert(j);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!seen[i]) throw LoadError(path.string() + ": no line for district " + std::to_string(i + 1));

  std::vector<std::pair<std::size_t, std::size_t>> one_sided;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : sets[i])
      if (!sets[j].count(i)) one_sided.emplace_back(i, j);
  for (const auto& [i, j] : one_sided) {
    const std::string pair = "(" + std::to_string(i + 1) + ", " + std::to_string(j + 1) + ")";
    if (policy == AdjacencyPolicy::Strict)
      throw LoadError(path.string() + ": asymmetric adjacency: " + std::to_string(i + 1) +
                      " lists " + std::to_string(j + 1) + " but not the reverse, pair " + pair);
    sets[j].insert(i);
    if (warnings) warnings->push_back("adjacency pair " + pair + " listed one way only; added reverse");
  }
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i].assign(sets[i].begin(), sets[i].end());
  return out;
}

models::LipCancerData load_lipcancer(const std::filesystem::path& data_path,
                                     const std::filesystem::path& adjacency_path,
                                     std::optional<std::size_t> expected, AdjacencyPolicy policy,
                                     std::vector<std::string>* warnings) {
  const Table t = read_csv(data_path);
  const std::size_t cd = column(t, data_path, "district");
  const std::size_t cy = column(t, data_path, "y");
  const std::size_t ce = column(t, data_path, "E");
  const std::size_t cx = column(t, data_path, "x");
  const std::size_t n = t.rows.size();
  check_count(data_path, n, expected, "districts");
  models::LipCancerData d;
  d.y.resize(n);
  d.expected.resize(n);
  d.covariate.resize(n);
  std::vector<bool> filled(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t line = t.line_numbers[r];
    const auto id = parse_number<std::size_t>(t.rows[r][cd], data_path, line);
    if (id < 1 || id > n || filled[id - 1])
      throw LoadError(data_path.string() + ":" + std::to_string(line) + ": bad or repeated district " +
                      t.rows[r][cd]);
    const std::size_t i = id - 1;
    filled[i] = true;
    d.y[i] = parse_number<std::int64_t>(t.rows[r][cy], data_path, line);
    d.expected[i] = parse_number<double>(t.rows[r][ce], data_path, line);
    d.covariate[i] = parse_number<double>(t.rows[r][cx], data_path, line);
    if (d.y[i] < 0) throw LoadError(data_path.string() + ":" + std::to_string(line) + ": negative count");
    if (!(d.expected[i] > 0.0))
      throw LoadError(data_path.string() + ":" + std::to_string(line) + ": expected count must be positive");
  }
  d.neighbors = load_adjacency(adjacency_path, n, policy, warnings);
  return d;
}

models::SeedsData load_seeds(const std::filesystem::path& path, std::optional<std::size_t> expected) {
  const Table t = read_csv(path);
  const std::size_t cr = column(t, path, "r");
  const std::size_t cn = column(t, path, "n");
  const std::size_t c1 = column(t, path, "x1");
  const std::size_t c2 = column(t, path, "x2");
  check_count(path, t.rows.size(), expected, "plates");
  models::SeedsData d;
  std::set<std::pair<int, int>> cells;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::size_t line = t.line_numbers[r];
    const auto rr = parse_number<std::int64_t>(t.rows[r][cr], path, line);
    const auto nn = parse_number<std::int64_t>(t.rows[r][cn], path, line);
    const auto x1 = parse_number<int>(t.rows[r][c1], path, line);
    const auto x2 = parse_number<int>(t.rows[r][c2], path, line);
    const std::string where = path.string() + ": row " + std::to_string(r + 1);
    if (nn < 1 || rr < 0 || rr > nn) throw LoadError(where + ": need 0 <= r <= n and n >= 1");
    if ((x1 != 0 && x1 != 1) || (x2 != 0 && x2 != 1)) throw LoadError(where + ": x1 and x2 must be 0 or 1");
    d.r.push_back(rr);
    d.n.push_back(nn);
    d.x1.push_back(x1);
    d.x2.push_back(x2);
    cells.emplace(x1, x2);
  }
  if (cells.size() != 4) throw LoadError(path.string() + ": not every (x1, x2) cell of the 2x2 layout is present");
  return d;
}

}  // namespace cveval::io
