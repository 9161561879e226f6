#pragma once

#include <cmath>
#include <cstddef>

namespace cveval::models {

// Gaussian random-walk step size tuned toward a target acceptance rate in
// batches of 50 proposals while adapting, then frozen.
class RandomWalkScale {
 public:
  explicit RandomWalkScale(double initial = 1.0, double target = 0.44)
      : log_scale_(std::log(initial)), target_(target) {}

  double scale() const { return std::exp(log_scale_); }

  void set_adapting(bool on) {
    adapting_ = on;
    batch_accepted_ = 0;
    batch_proposed_ = 0;
  }

  void record(bool accepted) {
    if (adapting_) {
      batch_accepted_ += accepted ? 1 : 0;
      if (++batch_proposed_ == kBatch) {
        ++batches_;
        const double rate = static_cast<double>(batch_accepted_) / kBatch;
        const double step = std::fmax(0.02, 1.0 / std::sqrt(static_cast<double>(batches_)));
        log_scale_ += rate > target_ ? step : -step;
        batch_accepted_ = 0;
        batch_proposed_ = 0;
      }
    } else {
      accepted_ += accepted ? 1 : 0;
      ++proposed_;
    }
  }

  // Over proposals made since adaptation stopped.
  double acceptance_rate() const {
    return proposed_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposed_);
  }

 private:
  static constexpr int kBatch = 50;

  double log_scale_;
  double target_;
  bool adapting_ = false;
  int batch_accepted_ = 0;
  int batch_proposed_ = 0;
  std::size_t batches_ = 0;
  std::size_t accepted_ = 0;
  std::size_t proposed_ = 0;
};

}  // namespace cveval::models
