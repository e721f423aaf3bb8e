#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "taumlmc/model.hpp"
#include "taumlmc/random.hpp"

namespace taumlmc {

struct TrajectoryPoint {
  double time = 0.0;
  std::vector<std::int64_t> counts;
};

/// Called at every jump with the state just before and just after it.
using JumpObserver =
    std::function<void(double time, std::span<const std::int64_t> before,
                       std::span<const std::int64_t> after)>;

struct ExactOptions {
  std::uint64_t event_budget = 1'000'000'000;
  /// When set, the state is recorded at multiples of this step (and t_end).
  std::optional<double> record_step;
  JumpObserver on_jump;
};

struct ExactPath {
  SystemState final_state;
  std::vector<std::uint64_t> firings;  // R_k(T)
  std::uint64_t events = 0;
  std::vector<TrajectoryPoint> trajectory;
};

/// Exact path of the scaled model on [0, t_end] by the next reaction method.
///
/// Each reaction owns a unit-rate clock (stream channel kShared) whose
/// internal time advances by the integrated intensity; the channel whose next
/// firing is reached first fires. Intensities N^(gamma + c_k) lambda_k^N(X^N)
/// equal the unscaled lambda_k(X) by construction and are evaluated in that
/// form.
ExactPath simulate_exact(const ScaledModel& model, double t_end, const PathStreams& streams,
                         const ExactOptions& options = {});

/// Sum of intensities at the initial state: expected events per unit time.
double estimate_event_rate(const ScaledModel& model);

}  // namespace taumlmc
