#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "taumlmc/exact.hpp"
#include "taumlmc/model.hpp"
#include "taumlmc/random.hpp"

namespace taumlmc {

/// Firing counts of the three streams of one reaction: shared, first-only,
/// second-only.
using ChannelCounts = std::array<std::uint64_t, 3>;

struct CoupledTauPair {
  double fine_step = 0.0;
  unsigned refinement = 0;  // coarse step = refinement * fine_step
  SystemState fine;
  SystemState coarse;
  std::vector<ChannelCounts> channel_firings;  // per reaction
  std::uint64_t fine_steps = 0;
  std::uint64_t cost = 0;  // fine steps x K
};

/// One reaction's draws in one fine step of a coupled tau/tau pair.
struct CoupledStep {
  std::uint64_t step = 0;
  std::size_t reaction = 0;
  double fine_intensity = 0.0;    // h * lambda_k(fine)
  double coarse_intensity = 0.0;  // h * lambda_k(coarse)
  std::array<std::int64_t, 3> counts{};
};

using CoupledStepObserver = std::function<void(const CoupledStep&)>;

/// Tau/tau pair driven by split Poisson streams.
///
/// Advances on the fine grid. Per step and reaction, with lf the fine intensity
/// (frozen on the fine grid) and lc the coarse one (refreshed every
/// `refinement` fine steps), three independent counts are drawn with means
/// h*min(lf,lc), h*(lf - min), h*(lc - min). The fine path receives channels 1
/// and 2, the coarse path channels 1 and 3.
///
/// refinement = 1 is accepted and couples a path with itself. t_end need only
/// be a multiple of the fine step; a trailing partial coarse interval keeps its
/// frozen intensity until t_end.
CoupledTauPair coupled_tau_pair(const ScaledModel& model, double fine_step, unsigned refinement,
                                double t_end, const PathStreams& streams,
                                const CoupledStepObserver& observer = {});

struct CoupledExactTauPair {
  double step = 0.0;
  SystemState exact;
  SystemState tau;
  std::vector<ChannelCounts> channel_firings;  // per reaction
  std::uint64_t events = 0;     // firings over all 3K channels
  std::uint64_t tau_steps = 0;
  std::uint64_t cost = 0;       // events + tau steps x K
};

/// Exact/tau pair by the next reaction method over 3K clocks.
///
/// For each reaction the channel rates are min(lx, lz), lx - min and lz - min,
/// where lx is evaluated at the current exact state and lz at the tau state
/// frozen at the last grid point. Channels 1 and 2 move the exact path,
/// channels 1 and 3 the tau path. Rates are refreshed after every firing and
/// at every grid crossing.
CoupledExactTauPair coupled_exact_tau(const ScaledModel& model, double step, double t_end,
                                      const PathStreams& streams,
                                      const ExactOptions& options = {});

}  // namespace taumlmc
