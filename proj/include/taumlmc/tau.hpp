#pragma once

#include <cstdint>
#include <vector>

#include "taumlmc/exact.hpp"
#include "taumlmc/model.hpp"
#include "taumlmc/random.hpp"

namespace taumlmc {

/// Number of steps t_end / h; throws InvalidGrid unless it is a positive
/// integer to relative tolerance 1e-9.
std::uint64_t grid_steps(double t_end, double h);

struct TauPath {
  double h = 0.0;
  SystemState final_state;
  std::vector<std::uint64_t> firings;  // R_k(T)
  std::uint64_t steps = 0;
  std::vector<TrajectoryPoint> record;  // state at every grid point when requested
};

/// Fixed-step tau-leaping. Each step draws, per reaction, a Poisson count with
/// mean h * lambda_k(Z(eta)) from the reaction's kShared stream and applies
/// count * zeta_k. Intensities vanish off the admissible orthant but the state
/// itself may become negative.
TauPath simulate_tau(const ScaledModel& model, double h, double t_end, const PathStreams& streams,
                     bool record = false);

}  // namespace taumlmc
