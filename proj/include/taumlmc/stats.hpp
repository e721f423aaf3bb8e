#pragma once

#include <cstdint>

namespace taumlmc {

/// Streaming central moments up to fourth order.
///
/// Samples are added one at a time (Welford) and partial accumulators are
/// combined with Pebay's pairwise update, so a fixed merge order gives
/// bit-identical results independent of how the work was scheduled.
class Moments {
 public:
  void add(double x);
  void merge(const Moments& other);

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }

  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const noexcept;

  /// Biased fourth central moment m4 = M4 / n.
  double fourth_central_moment() const noexcept;

  /// Standard error of the sample variance, from the fourth central moment:
  /// sqrt((m4 - s^4 (n - 3) / (n - 1)) / n).
  double variance_stderr() const noexcept;

  /// Standard error of the mean, sqrt(s^2 / n).
  double mean_stderr() const noexcept;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace taumlmc
