#include "taumlmc/tau.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "state_update.hpp"
#include "taumlmc/error.hpp"

namespace taumlmc {

std::uint64_t grid_steps(double t_end, double h) {
  if (!(h > 0.0) || !std::isfinite(h) || !(t_end > 0.0) || !std::isfinite(t_end)) {
    throw InvalidGrid("step size and t_end must be positive and finite");
  }
  const double ratio = t_end / h;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw InvalidGrid("t_end / h = " + std::to_string(ratio) + " is not a positive integer");
  }
  return static_cast<std::uint64_t>(rounded);
}

TauPath simulate_tau(const ScaledModel& model, double h, double t_end, const PathStreams& streams,
                     bool record) {
  const ReactionNetwork& network = model.network;
  const std::size_t K = network.reaction_count();
  TauPath path;
  path.h = h;
  path.steps = grid_steps(t_end, h);
  path.final_state = model.initial;
  path.firings.assign(K, 0);
  std::vector<std::int64_t>& z = path.final_state.counts;

  std::vector<RandomStream> counts;
  counts.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    counts.emplace_back(streams.key(static_cast<std::uint32_t>(k), Channel::kShared));
  }

  std::vector<double> rates(K);
  std::vector<std::int64_t> fired(K);
  if (record) path.record.push_back({0.0, z});
  for (std::uint64_t j = 0; j < path.steps; ++j) {
    propensity_into(network, z, rates);
    for (std::size_t k = 0; k < K; ++k) fired[k] = poisson_sample(counts[k], rates[k] * h);
    for (std::size_t k = 0; k < K; ++k) {
      detail::apply_reaction(network, k, fired[k], z);
      path.firings[k] += static_cast<std::uint64_t>(fired[k]);
    }
    if (record) {
      path.record.push_back({t_end * static_cast<double>(j + 1) / static_cast<double>(path.steps), z});
    }
  }
  return path;
}

}  // namespace taumlmc
