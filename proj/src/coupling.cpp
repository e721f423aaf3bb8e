#include "taumlmc/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "state_update.hpp"
#include "taumlmc/error.hpp"
#include "taumlmc/tau.hpp"

namespace taumlmc {

namespace {

constexpr std::array<Channel, 3> kChannels = {Channel::kShared, Channel::kFirst, Channel::kSecond};

}  // namespace

CoupledTauPair coupled_tau_pair(const ScaledModel& model, double fine_step, unsigned refinement,
                                double t_end, const PathStreams& streams,
                                const CoupledStepObserver& observer) {
  if (refinement < 1) throw InvalidArgument("refinement factor must be >= 1");
  const ReactionNetwork& network = model.network;
  const std::size_t K = network.reaction_count();

  CoupledTauPair pair;
  pair.fine_step = fine_step;
  pair.refinement = refinement;
  pair.fine_steps = grid_steps(t_end, fine_step);
  pair.cost = pair.fine_steps * K;
  pair.fine = model.initial;
  pair.coarse = model.initial;
  pair.channel_firings.assign(K, ChannelCounts{});

  std::vector<RandomStream> draws;
  draws.reserve(3 * K);
  for (std::size_t k = 0; k < K; ++k) {
    for (Channel ch : kChannels) draws.emplace_back(streams.key(static_cast<std::uint32_t>(k), ch));
  }

  std::vector<double> fine_rates(K);
  std::vector<double> coarse_rates(K);
  std::vector<std::array<std::int64_t, 3>> fired(K);
  const double h = fine_step;
  for (std::uint64_t j = 0; j < pair.fine_steps; ++j) {
    propensity_into(network, pair.fine.counts, fine_rates);
    if (j % refinement == 0) propensity_into(network, pair.coarse.counts, coarse_rates);
    for (std::size_t k = 0; k < K; ++k) {
      const double shared = std::min(fine_rates[k], coarse_rates[k]);
      const std::array<double, 3> means = {h * shared, h * (fine_rates[k] - shared),
                                           h * (coarse_rates[k] - shared)};
      for (std::size_t c = 0; c < 3; ++c) fired[k][c] = poisson_sample(draws[3 * k + c], means[c]);
      if (observer) {
        observer(CoupledStep{j, k, h * fine_rates[k], h * coarse_rates[k], fired[k]});
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      detail::apply_reaction(network, k, fired[k][0] + fired[k][1], pair.fine.counts);
      detail::apply_reaction(network, k, fired[k][0] + fired[k][2], pair.coarse.counts);
      for (std::size_t c = 0; c < 3; ++c) {
        pair.channel_firings[k][c] += static_cast<std::uint64_t>(fired[k][c]);
      }
    }
  }
  return pair;
}

CoupledExactTauPair coupled_exact_tau(const ScaledModel& model, double step, double t_end,
                                      const PathStreams& streams, const ExactOptions& options) {
  const ReactionNetwork& network = model.network;
  const std::size_t K = network.reaction_count();
  for (std::int64_t x : model.initial.counts) {
    if (x < 0) throw InvalidArgument("exact simulation needs a nonnegative initial state");
  }

  CoupledExactTauPair pair;
  pair.step = step;
  pair.tau_steps = grid_steps(t_end, step);
  pair.exact = model.initial;
  pair.tau = model.initial;
  pair.channel_firings.assign(K, ChannelCounts{});
  std::vector<std::int64_t>& x = pair.exact.counts;
  std::vector<std::int64_t>& z = pair.tau.counts;

  const std::size_t C = 3 * K;
  std::vector<RandomStream> clocks;
  clocks.reserve(C);
  for (std::size_t k = 0; k < K; ++k) {
    for (Channel ch : kChannels) clocks.emplace_back(streams.key(static_cast<std::uint32_t>(k), ch));
  }
  std::vector<double> internal(C, 0.0);
  std::vector<double> next_fire(C);
  for (std::size_t c = 0; c < C; ++c) next_fire[c] = exponential_sample(clocks[c], 1.0);

  std::vector<double> exact_rates(K);
  std::vector<double> tau_rates(K);
  std::vector<double> rates(C);
  propensity_into(network, z, tau_rates);

  const double inf = std::numeric_limits<double>::infinity();
  const auto grid_time = [&](std::uint64_t i) {
    return i >= pair.tau_steps ? t_end
                               : t_end * static_cast<double>(i) / static_cast<double>(pair.tau_steps);
  };
  std::uint64_t interval = 0;  // tau intensities frozen at grid_time(interval)
  double t = 0.0;
  for (;;) {
    propensity_into(network, x, exact_rates);
    for (std::size_t k = 0; k < K; ++k) {
      const double shared = std::min(exact_rates[k], tau_rates[k]);
      rates[3 * k] = shared;
      rates[3 * k + 1] = exact_rates[k] - shared;
      rates[3 * k + 2] = tau_rates[k] - shared;
    }
    std::size_t winner = C;
    double wait = inf;
    for (std::size_t c = 0; c < C; ++c) {
      if (rates[c] <= 0.0) continue;
      const double dt = (next_fire[c] - internal[c]) / rates[c];
      if (dt < wait) {
        wait = dt;
        winner = c;
      }
    }

    const double horizon = grid_time(interval + 1);
    if (winner == C || t + wait >= horizon) {
      for (std::size_t c = 0; c < C; ++c) internal[c] += rates[c] * (horizon - t);
      t = horizon;
      if (++interval >= pair.tau_steps) break;
      propensity_into(network, z, tau_rates);
      continue;
    }

    if (pair.events >= options.event_budget) {
      throw EventBudgetExceeded("coupled exact/tau pair exceeded " +
                                std::to_string(options.event_budget) + " events");
    }
    t += wait;
    for (std::size_t c = 0; c < C; ++c) internal[c] += rates[c] * wait;
    internal[winner] = next_fire[winner];
    next_fire[winner] += exponential_sample(clocks[winner], 1.0);

    const std::size_t k = winner / 3;
    const std::size_t channel = winner % 3;
    if (channel != 2) detail::apply_reaction(network, k, 1, x);
    if (channel != 1) detail::apply_reaction(network, k, 1, z);
    ++pair.channel_firings[k][channel];
    ++pair.events;
  }
  pair.cost = pair.events + pair.tau_steps * K;
  return pair;
}

}  // namespace taumlmc
