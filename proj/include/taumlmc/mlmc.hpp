#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "taumlmc/exact.hpp"
#include "taumlmc/model.hpp"
#include "taumlmc/stats.hpp"

namespace taumlmc {

/// Levels base..finest with step sizes h_l = T * M^-l.
struct LevelSchedule {
  double t_end = 1.0;
  unsigned refinement = 2;
  int base_level = 0;
  int finest_level = 0;

  double step(int level) const;
  std::uint64_t steps(int level) const;  // M^level
  int level_count() const { return finest_level - base_level + 1; }
};

/// base level 0; finest level L is the smallest integer with T M^-L <= theta * eps.
/// Throws ScheduleOverflow when L would exceed 60.
LevelSchedule build_schedule(double t_end, unsigned refinement, double eps, double theta = 1.0);

/// Terminal-time observable f(x) = sum_i a_i x_i on the scaled state.
class Observable {
 public:
  static Observable coordinate(std::size_t species, std::size_t species_count);
  static Observable linear(std::vector<double> weights);

  double operator()(std::span<const std::int64_t> counts, const ScalingProfile& scaling) const;

  const std::vector<double>& weights() const noexcept { return weights_; }

  /// Bound on |df/dx_i|; second derivatives vanish.
  double derivative_bound() const;

 private:
  explicit Observable(std::vector<double> weights) : weights_(std::move(weights)) {}
  std::vector<double> weights_;
};

/// Parses "X[<species>]" or "lin:<a1>,<a2>,...".
Observable parse_observable(const std::string& text, const ReactionNetwork& network);

enum class LevelKind { kBase, kInterior, kCorrection };

/// Samples of one term of the telescoping sum.
struct LevelStatistics {
  LevelKind kind = LevelKind::kBase;
  int level = 0;
  double step = 0.0;
  Moments moments;
  std::uint64_t cost = 0;

  /// "0", "1", ... for tau levels and "E" for the exact correction.
  std::string id() const;
  std::uint64_t paths() const { return moments.count(); }
  double mean() const { return moments.mean(); }
  double variance() const { return moments.variance(); }
  double cost_per_path() const;

  /// Appends samples of the same level drawn from a disjoint path range.
  void merge(const LevelStatistics& more);
};

enum class EstimatorKind { kBiased, kUnbiased };
enum class AllocationMode { kPaper, kAdaptive };

struct Allocation {
  std::vector<double> raw;            // before rounding
  std::vector<std::uint64_t> paths;   // ceiled, floored at 2
};

/// Order-of-magnitude allocation that spreads the variance budget evenly:
/// n_0 = cbar N^(gamma-rho) m eps^-2, n_l = cbar N^(gamma-rho) m h_l eps^-2 with
/// m = L - l0 + 1 (biased) or L + 2 (unbiased, which also gets
/// n_E = cbar N^(gamma-rho) (L+2) h_L eps^-2 as its last entry).
Allocation allocate_paper(const LevelSchedule& schedule, const ScalingProfile& scaling,
                          double eps, double calibration, EstimatorKind kind);

/// Work-minimising allocation n_l = eps^-2 sqrt(V_l / c_l) sum_j sqrt(V_j c_j),
/// which meets sum_l V_l / n_l = eps^2 exactly before rounding. Throws
/// DegeneratePilot when a pilot variance or per-path cost is unusable.
Allocation allocate_adaptive(std::span<const LevelStatistics> pilot, double eps);

struct SamplingOptions {
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::uint64_t first_path = 0;  // path indices [first_path, first_path + n)
  ExactOptions exact;
};

/// Base level: f(Z_l(T)) over single tau paths. Interior level: f(Z_l(T)) -
/// f(Z_{l-1}(T)) over coupled tau pairs.
LevelStatistics estimate_level(const ScaledModel& model, const LevelSchedule& schedule, int level,
                               std::uint64_t n, const Observable& f,
                               const SamplingOptions& options);

/// f(X(T)) - f(Z_L(T)) over coupled exact/tau pairs at the finest level.
LevelStatistics estimate_exact_correction(const ScaledModel& model, const LevelSchedule& schedule,
                                          std::uint64_t n, const Observable& f,
                                          const SamplingOptions& options);

struct MlmcOptions {
  double t_end = 1.0;
  double eps = 0.01;
  unsigned refinement = 3;
  double theta = 1.0;
  AllocationMode allocation = AllocationMode::kAdaptive;
  std::uint64_t pilot_paths = 100;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  ExactOptions exact;
};

struct MlmcEstimate {
  EstimatorKind kind = EstimatorKind::kBiased;
  double estimate = 0.0;
  double variance = 0.0;  // sum over levels of V_l / n_l
  double eps = 0.0;
  LevelSchedule schedule;
  std::vector<LevelStatistics> levels;
  std::uint64_t total_cost = 0;  // includes pilot work
  bool shortfall = false;        // variance > eps^2
  std::vector<std::string> warnings;

  double standard_error() const;
};

/// Q_B = sum of level estimates; unbiased for E f(Z_L(T)).
MlmcEstimate run_biased(const ScaledModel& model, const Observable& f, const MlmcOptions& options);

/// Q_UB = Q_E + sum of level estimates; unbiased for E f(X(T)).
MlmcEstimate run_unbiased(const ScaledModel& model, const Observable& f,
                          const MlmcOptions& options);

}  // namespace taumlmc
