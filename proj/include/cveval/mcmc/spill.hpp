#pragma once

#include <filesystem>

#include "cveval/mcmc/sample_store.hpp"

namespace cveval::mcmc {

// Binary little-endian spill of a SampleStore.
//
//   magic      8 bytes  "CVEVSPIL"
//   version    u32      1
//   n_theta    u32
//   n_units    u32
//   n_chains   u32
//   per_chain  u64
//   weighted   u8
//   names      n_theta x (u32 length, bytes)
//   draws      n_chains * per_chain rows of (n_theta + n_units) f64
//   weights    per_chain f64 log weights, present when weighted = 1
void write_spill(const std::filesystem::path& path, const SampleStore& store);
SampleStore read_spill(const std::filesystem::path& path);

}  // namespace cveval::mcmc
