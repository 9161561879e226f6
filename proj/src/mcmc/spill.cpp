#include "cveval/mcmc/spill.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "cveval/error.hpp"

namespace cveval::mcmc {

namespace {

constexpr std::array<char, 8> kMagic{'C', 'V', 'E', 'V', 'S', 'P', 'I', 'L'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

template <typename T>
void put(std::ofstream& out, T value) {
  const T le = to_little(value);
  out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T raw{};
  if (!in.read(reinterpret_cast<char*>(&raw), sizeof(T)))
    throw LoadError(path.string() + ": truncated spill file");
  return to_little(raw);
}

}  // namespace

void write_spill(const std::filesystem::path& path, const SampleStore& store) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.n_theta()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.n_units()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.n_chains()));
  put<std::uint64_t>(out, store.per_chain());
  put<std::uint8_t>(out, store.is_weighted() ? 1 : 0);
  for (const auto& name : store.theta_names()) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  for (double v : store.raw()) put<double>(out, v);
  for (double w : store.log_weights()) put<double>(out, w);
  if (!out) throw IoError("write failed for " + path.string());
}

SampleStore read_spill(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw LoadError(path.string() + ": not a sample spill file");
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion)
    throw LoadError(path.string() + ": unsupported spill version " + std::to_string(version));
  const auto n_theta = get<std::uint32_t>(in, path);
  const auto n_units = get<std::uint32_t>(in, path);
  const auto n_chains = get<std::uint32_t>(in, path);
  const auto per_chain = get<std::uint64_t>(in, path);
  const auto weighted = get<std::uint8_t>(in, path);
  std::vector<std::string> names(n_theta);
  for (auto& name : names) {
    const auto len = get<std::uint32_t>(in, path);
    name.resize(len);
    if (!in.read(name.data(), len)) throw LoadError(path.string() + ": truncated spill file");
  }
  SampleStore store(std::move(names), n_units, n_chains, per_chain);
  for (double& v : store.raw()) v = get<double>(in, path);
  if (weighted) {
    std::vector<double> w(store.size());
    for (double& x : w) x = get<double>(in, path);
    store.set_log_weights(std::move(w));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw LoadError(path.string() + ": trailing bytes after spill records");
  return store;
}

}  // namespace cveval::mcmc
