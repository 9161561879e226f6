#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace cveval::models {

struct LipCancerData {
  std::vector<std::int64_t> y;
  std::vector<double> expected;
  std::vector<double> covariate;
  // 0-based, symmetric, sorted.
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t size() const { return y.size(); }
};

struct SeedsData {
  std::vector<std::int64_t> r;
  std::vector<std::int64_t> n;
  std::vector<int> x1;
  std::vector<int> x2;

  std::size_t size() const { return r.size(); }
};

}  // namespace cveval::models
