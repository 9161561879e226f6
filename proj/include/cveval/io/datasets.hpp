#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cveval/models/data.hpp"

namespace cveval::io {

inline constexpr std::size_t kGalaxyCount = 82;
inline constexpr std::size_t kLipCancerCount = 56;
inline constexpr std::size_t kSeedsCount = 21;

// Single `velocity` column; values are divided by `divisor` on load.
// `expected` pins the row count (nullopt accepts any non-empty file).
std::vector<double> load_galaxy(const std::filesystem::path& path,
                                std::optional<std::size_t> expected = kGalaxyCount,
                                double divisor = 1000.0);

enum class AdjacencyPolicy {
  // A one-sided listing is an error naming the pair.
  Strict,
  // Take the union of both directions and report each repaired pair.
  Symmetrize,
};

// `district: neighbor neighbor ...`, 1-based ids, one line per district.
std::vector<std::vector<std::size_t>> load_adjacency(const std::filesystem::path& path,
                                                     std::size_t n_districts,
                                                     AdjacencyPolicy policy = AdjacencyPolicy::Strict,
                                                     std::vector<std::string>* warnings = nullptr);

// Columns district, y, E, x plus the adjacency file.
models::LipCancerData load_lipcancer(const std::filesystem::path& data_path,
                                     const std::filesystem::path& adjacency_path,
                                     std::optional<std::size_t> expected = kLipCancerCount,
                                     AdjacencyPolicy policy = AdjacencyPolicy::Strict,
                                     std::vector<std::string>* warnings = nullptr);

// Columns r, n, x1, x2.
models::SeedsData load_seeds(const std::filesystem::path& path,
                             std::optional<std::size_t> expected = kSeedsCount);

}  // namespace cveval::io
