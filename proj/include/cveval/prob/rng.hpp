#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace cveval::prob {

// SplitMix64 finalizer; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t combine_keys(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

// Reproducible random stream identified by (seed, stream id).
//
// The generator is xoshiro256** keyed from SplitMix64 over the pair, so the
// draw sequence depends only on the two identifiers. `split(tag)` derives a
// child stream from the identifiers (not from the current position), which
// makes per-chain and per-unit substreams independent of how much the parent
// has been consumed or in which order workers run.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t key = combine_keys(seed, stream_id);
    for (auto& word : state_) {
      key += 0x9e3779b97f4a7c15ULL;
      word = mix64(key);
    }
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  RngStream split(std::uint64_t tag) const noexcept {
    return RngStream(combine_keys(seed_, stream_id_), tag);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal, Marsaglia polar method with one cached deviate.
  double normal() noexcept;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cveval::prob
