#include "taumlmc/exact.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "state_update.hpp"
#include "taumlmc/error.hpp"

namespace taumlmc {

namespace {

class Recorder {
 public:
  Recorder(std::optional<double> step, double t_end) : t_end_(t_end) {
    if (!step) return;
    if (!(*step > 0.0)) throw InvalidArgument("record step must be positive");
    step_ = *step;
    last_index_ = static_cast<std::uint64_t>(std::floor(t_end / step_ + 1e-9));
    active_ = true;
  }

  /// Records every grid point strictly before `time` with `state`.
  void advance(double time, std::span<const std::int64_t> state,
               std::vector<TrajectoryPoint>& out) {
    if (!active_) return;
    while (next_ <= last_index_ && static_cast<double>(next_) * step_ < time) {
      out.push_back({static_cast<double>(next_) * step_, {state.begin(), state.end()}});
      ++next_;
    }
  }

  void finish(std::span<const std::int64_t> state, std::vector<TrajectoryPoint>& out) {
    if (!active_) return;
    while (next_ <= last_index_) {
      out.push_back({std::min(static_cast<double>(next_) * step_, t_end_), {state.begin(), state.end()}});
      ++next_;
    }
    if (out.empty() || out.back().time < t_end_ * (1.0 - 1e-12)) {
      out.push_back({t_end_, {state.begin(), state.end()}});
    }
  }

 private:
  bool active_ = false;
  double step_ = 0.0;
  double t_end_;
  std::uint64_t next_ = 0;
  std::uint64_t last_index_ = 0;
};

}  // namespace

ExactPath simulate_exact(const ScaledModel& model, double t_end, const PathStreams& streams,
                         const ExactOptions& options) {
  const ReactionNetwork& network = model.network;
  const std::size_t K = network.reaction_count();
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidArgument("t_end must be positive");
  for (std::int64_t x : model.initial.counts) {
    if (x < 0) throw InvalidArgument("exact simulation needs a nonnegative initial state");
  }

  ExactPath path;
  path.final_state = model.initial;
  path.firings.assign(K, 0);
  std::vector<std::int64_t>& x = path.final_state.counts;
  std::vector<std::int64_t> before;
  Recorder recorder(options.record_step, t_end);

  std::vector<RandomStream> clocks;
  clocks.reserve(K);
  std::vector<double> internal(K, 0.0);  // integrated intensity per channel
  std::vector<double> next_fire(K);      // internal time of next firing
  for (std::size_t k = 0; k < K; ++k) {
    clocks.emplace_back(streams.key(static_cast<std::uint32_t>(k), Channel::kShared));
    next_fire[k] = exponential_sample(clocks[k], 1.0);
  }

  std::vector<double> rates(K);
  const double inf = std::numeric_limits<double>::infinity();
  double t = 0.0;
  for (;;) {
    propensity_into(network, x, rates);
    std::size_t winner = K;
    double wait = inf;
    for (std::size_t k = 0; k < K; ++k) {
      if (rates[k] <= 0.0) continue;
      const double dt = (next_fire[k] - internal[k]) / rates[k];
      if (dt < wait) {
        wait = dt;
        winner = k;
      }
    }
    if (winner == K || t + wait > t_end) {
      for (std::size_t k = 0; k < K; ++k) internal[k] += rates[k] * (t_end - t);
      break;
    }
    if (path.events >= options.event_budget) {
      throw EventBudgetExceeded("exact path exceeded " + std::to_string(options.event_budget) +
                                " events");
    }
    t += wait;
    for (std::size_t k = 0; k < K; ++k) internal[k] += rates[k] * wait;
    internal[winner] = next_fire[winner];
    next_fire[winner] += exponential_sample(clocks[winner], 1.0);

    recorder.advance(t, x, path.trajectory);
    if (options.on_jump) before = x;
    detail::apply_reaction(network, winner, 1, x);
    ++path.firings[winner];
    ++path.events;
    if (options.on_jump) options.on_jump(t, before, x);
  }
  recorder.finish(x, path.trajectory);
  return path;
}

double estimate_event_rate(const ScaledModel& model) {
  double total = 0.0;
  for (double rate : propensity(model.network, model.initial.counts)) total += rate;
  return total;
}

}  // namespace taumlmc
