#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "taumlmc/mlmc.hpp"
#include "taumlmc/model.hpp"

namespace taumlmc {

/// A family of models indexed by the system size N.
using ModelFamily = std::function<Model(double N)>;

enum class PairKind {
  kTauTau,       // coupled tau/tau, fine step h and coarse step M h
  kExactTau,     // coupled exact/tau at step h
  kIndependent,  // tau paths at h and M h from independent streams
};

std::string to_string(PairKind kind);
PairKind parse_pair_kind(const std::string& text);

struct SweepRow {
  double N = 0.0;
  double h = 0.0;
  PairKind kind = PairKind::kTauTau;
  std::uint64_t pairs = 0;
  double variance = 0.0;    // unbiased sample variance of f(first) - f(second)
  double var_stderr = 0.0;  // from the fourth central moment
  std::uint64_t cost = 0;
  double mean = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
};

struct SweepOptions {
  double t_end = 1.0;
  unsigned refinement = 3;
  std::uint64_t pairs = 10'000;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  ExactOptions exact;
};

/// One cell of a sweep. `cell` selects the stream level so cells are independent.
SweepRow variance_cell(const ScaledModel& model, double h, PairKind kind, const Observable& f,
                       const SweepOptions& options, std::int32_t cell);

/// Cells in N-major order over the (N, h) grid.
SweepTable variance_sweep(const ModelFamily& family, std::span<const double> sizes,
                          std::span<const double> steps, PairKind kind, const Observable& f,
                          const SweepOptions& options);

/// log V = log C + a log N + b log h by ordinary least squares.
struct PowerLawFit {
  double C = 0.0;
  double a = 0.0;
  double b = 0.0;
  double residual_rms = 0.0;
  bool fitted_n_exponent = true;
};

/// Throws SingularDesign when the rows do not span two distinct N and two
/// distinct h, and InvalidArgument on nonpositive variances.
PowerLawFit fit_power_law(const SweepTable& table);

/// Fits C h^b only (a reported as 0, fitted_n_exponent false).
PowerLawFit fit_power_law_h_only(const SweepTable& table);

/// y = C x^p by least squares in log space.
struct LogLogFit {
  double coefficient = 0.0;
  double exponent = 0.0;
  double residual_rms = 0.0;
};
LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

/// Euler solution z_h of the mean-field ODE dx/dt = F^N(x), piecewise linear in time.
struct MeanFieldPath {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::uint64_t drift_evaluations = 0;

  /// Linear interpolation between grid points; t is clamped to the grid.
  std::vector<double> at(double t) const;
  void at(double t, std::span<double> out) const;
};

MeanFieldPath mean_field_euler(const ScaledModel& model, double h, double t_end);

struct DeviationEstimate {
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::uint64_t paths = 0;
};

struct DeviationOptions {
  std::uint64_t paths = 1000;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::uint64_t reference_steps = 100'000;  // Euler reference at h = T / reference_steps
  std::uint64_t check_points = 1000;        // extra evaluation grid between jumps
  ExactOptions exact;
};

/// Monte Carlo estimate of E[ sup_{s <= T} |X^N(s) - x^N(s)|^2 ] against a fine
/// Euler reference. The supremum is taken over both sides of every jump and
/// over an evenly spaced check grid.
DeviationEstimate deviation_moment(const ScaledModel& model, double t_end,
                                   const DeviationOptions& options);

struct ComplexityRow {
  double eps = 0.0;
  int finest_level = 0;
  double estimate = 0.0;
  double variance = 0.0;
  std::uint64_t cost = 0;
  /// Cost of plain tau-leaping at h_L with ceil(V / eps^2) paths, V from a pilot.
  double single_level_cost = 0.0;
};

std::vector<ComplexityRow> complexity_sweep(const ScaledModel& model, const Observable& f,
                                            std::span<const double> eps_values,
                                            EstimatorKind kind, const MlmcOptions& options);

}  // namespace taumlmc
