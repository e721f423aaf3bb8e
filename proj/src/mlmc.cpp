#include "taumlmc/mlmc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "taumlmc/coupling.hpp"
#include "taumlmc/error.hpp"
#include "taumlmc/parallel.hpp"
#include "taumlmc/tau.hpp"

namespace taumlmc {

namespace {

constexpr int kMaxLevel = 60;

std::uint64_t checked_power(unsigned base, int exponent) {
  std::uint64_t value = 1;
  for (int i = 0; i < exponent; ++i) {
    if (__builtin_mul_overflow(value, static_cast<std::uint64_t>(base), &value)) {
      throw ScheduleOverflow("M^" + std::to_string(exponent) + " overflows 64 bits");
    }
  }
  return value;
}

}  // namespace

double LevelSchedule::step(int level) const {
  return t_end / static_cast<double>(steps(level));
}

std::uint64_t LevelSchedule::steps(int level) const {
  if (level < 0 || level > kMaxLevel) throw ScheduleOverflow("level out of range");
  return checked_power(refinement, level);
}

LevelSchedule build_schedule(double t_end, unsigned refinement, double eps, double theta) {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidArgument("T must be positive");
  if (refinement < 2) throw InvalidArgument("refinement factor M must be >= 2");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("eps must be positive");
  if (!(theta > 0.0) || !std::isfinite(theta)) throw InvalidArgument("theta must be positive");

  LevelSchedule schedule;
  schedule.t_end = t_end;
  schedule.refinement = refinement;
  const double target = theta * eps * (1.0 + 1e-12);
  double h = t_end;
  int level = 0;
  while (h > target) {
    if (++level > kMaxLevel) {
      throw ScheduleOverflow("more than " + std::to_string(kMaxLevel) + " levels required");
    }
    h /= static_cast<double>(refinement);
  }
  schedule.finest_level = level;
  return schedule;
}

Observable Observable::coordinate(std::size_t species, std::size_t species_count) {
  if (species >= species_count) throw InvalidArgument("observable species index out of range");
  std::vector<double> w(species_count, 0.0);
  w[species] = 1.0;
  return Observable(std::move(w));
}

Observable Observable::linear(std::vector<double> weights) {
  if (weights.empty()) throw InvalidArgument("linear observable needs weights");
  for (double w : weights) {
    if (!std::isfinite(w)) throw InvalidArgument("observable weights must be finite");
  }
  return Observable(std::move(weights));
}

double Observable::operator()(std::span<const std::int64_t> counts,
                              const ScalingProfile& scaling) const {
  double value = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] != 0.0) {
      value += weights_[i] * static_cast<double>(counts[i]) * scaling.species_scale[i];
    }
  }
  return value;
}

double Observable::derivative_bound() const {
  double bound = 0.0;
  for (double w : weights_) bound = std::max(bound, std::abs(w));
  return bound;
}

Observable parse_observable(const std::string& text, const ReactionNetwork& network) {
  const std::size_t d = network.species_count();
  if (text.size() > 3 && text.rfind("X[", 0) == 0 && text.back() == ']') {
    const std::string name = text.substr(2, text.size() - 3);
    const auto index = network.species_index(name);
    if (!index) throw InvalidArgument("observable names unknown species '" + name + "'");
    return Observable::coordinate(*index, d);
  }
  if (text.rfind("lin:", 0) == 0) {
    std::vector<double> weights;
    std::stringstream in(text.substr(4));
    std::string item;
    while (std::getline(in, item, ',')) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(item, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
        throw InvalidArgument("bad observable weight '" + item + "'");
      }
      weights.push_back(value);
    }
    if (weights.size() != d) {
      throw InvalidArgument("linear observable needs " + std::to_string(d) + " weights");
    }
    return Observable::linear(std::move(weights));
  }
  throw InvalidArgument("observable must be X[<species>] or lin:<a1>,...; got '" + text + "'");
}

std::string LevelStatistics::id() const {
  return kind == LevelKind::kCorrection ? "E" : std::to_string(level);
}

double LevelStatistics::cost_per_path() const {
  return paths() == 0 ? 0.0 : static_cast<double>(cost) / static_cast<double>(paths());
}

void LevelStatistics::merge(const LevelStatistics& more) {
  moments.merge(more.moments);
  cost += more.cost;
}

Allocation allocate_paper(const LevelSchedule& schedule, const ScalingProfile& scaling,
                          double eps, double calibration, EstimatorKind kind) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (!(calibration >= 0.0) || !std::isfinite(calibration)) {
    throw InvalidArgument("calibration constant must be finite and >= 0");
  }
  const int L = schedule.finest_level;
  const double multiplicity = kind == EstimatorKind::kBiased
                                  ? static_cast<double>(L - schedule.base_level + 1)
                                  : static_cast<double>(L + 2);
  const double factor =
      calibration * std::pow(scaling.N, scaling.gamma - scaling.rho) * multiplicity / (eps * eps);

  Allocation a;
  for (int level = schedule.base_level; level <= L; ++level) {
    a.raw.push_back(level == schedule.base_level ? factor : factor * schedule.step(level));
  }
  if (kind == EstimatorKind::kUnbiased) a.raw.push_back(factor * schedule.step(L));
  for (double raw : a.raw) {
    a.paths.push_back(std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::ceil(raw))));
  }
  return a;
}

Allocation allocate_adaptive(std::span<const LevelStatistics> pilot, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (pilot.empty()) throw DegeneratePilot("no pilot levels");
  double total = 0.0;
  for (const auto& level : pilot) {
    if (level.paths() < 2) throw DegeneratePilot("pilot level " + level.id() + " has < 2 paths");
    const double v = level.variance();
    const double c = level.cost_per_path();
    if (!std::isfinite(v) || v < 0.0) {
      throw DegeneratePilot("pilot variance of level " + level.id() + " is not finite");
    }
    if (!std::isfinite(c) || !(c > 0.0)) {
      throw DegeneratePilot("pilot cost of level " + level.id() + " is not positive");
    }
    total += std::sqrt(v * c);
  }
  Allocation a;
  for (const auto& level : pilot) {
    const double raw = std::sqrt(level.variance() / level.cost_per_path()) * total / (eps * eps);
    a.raw.push_back(raw);
    // The relative guard keeps exact integers from being bumped by rounding noise.
    const double n = std::ceil(raw * (1.0 - 1e-12));
    a.paths.push_back(std::max<std::uint64_t>(2, static_cast<std::uint64_t>(n)));
  }
  return a;
}

namespace {

struct Partial {
  Moments moments;
  std::uint64_t cost = 0;
};

template <class Sample>
LevelStatistics collect(LevelKind kind, int level, double step, std::uint64_t n,
                        const SamplingOptions& options, Sample sample) {
  LevelStatistics stats;
  stats.kind = kind;
  stats.level = level;
  stats.step = step;
  const auto partials = map_chunks<Partial>(
      options.first_path, options.first_path + n, options.workers,
      [&](std::uint64_t begin, std::uint64_t end) {
        Partial p;
        for (std::uint64_t i = begin; i < end; ++i) {
          const auto [value, cost] = sample(i);
          p.moments.add(value);
          p.cost += cost;
        }
        return p;
      });
  for (const auto& p : partials) {
    stats.moments.merge(p.moments);
    stats.cost += p.cost;
  }
  return stats;
}

struct Sampled {
  double value;
  std::uint64_t cost;
};

}  // namespace

LevelStatistics estimate_level(const ScaledModel& model, const LevelSchedule& schedule, int level,
                               std::uint64_t n, const Observable& f,
                               const SamplingOptions& options) {
  if (level < schedule.base_level) throw InvalidArgument("level below the base level");
  const bool base = level == schedule.base_level;
  if (n < 1 || (!base && options.first_path == 0 && n < 2)) {
    throw InvalidArgument("level " + std::to_string(level) + " needs at least 2 paths");
  }
  const double h = schedule.step(level);
  const std::size_t K = model.network.reaction_count();
  const auto& T = schedule.t_end;
  if (base) {
    return collect(LevelKind::kBase, level, h, n, options, [&](std::uint64_t i) {
      const PathStreams streams{options.seed, level, i};
      const TauPath path = simulate_tau(model, h, T, streams);
      return Sampled{f(path.final_state.counts, model.scaling), path.steps * K};
    });
  }
  return collect(LevelKind::kInterior, level, h, n, options, [&](std::uint64_t i) {
    const PathStreams streams{options.seed, level, i};
    const CoupledTauPair pair = coupled_tau_pair(model, h, schedule.refinement, T, streams);
    return Sampled{f(pair.fine.counts, model.scaling) - f(pair.coarse.counts, model.scaling),
                   pair.cost};
  });
}

LevelStatistics estimate_exact_correction(const ScaledModel& model, const LevelSchedule& schedule,
                                          std::uint64_t n, const Observable& f,
                                          const SamplingOptions& options) {
  if (n < 1 || (options.first_path == 0 && n < 2)) {
    throw InvalidArgument("exact correction needs at least 2 pairs");
  }
  const double h = schedule.step(schedule.finest_level);
  return collect(LevelKind::kCorrection, schedule.finest_level, h, n, options,
                 [&](std::uint64_t i) {
                   const PathStreams streams{options.seed, kCorrectionLevel, i};
                   const CoupledExactTauPair pair =
                       coupled_exact_tau(model, h, schedule.t_end, streams, options.exact);
                   return Sampled{f(pair.exact.counts, model.scaling) -
                                      f(pair.tau.counts, model.scaling),
                                  pair.cost};
                 });
}

double MlmcEstimate::standard_error() const { return std::sqrt(variance); }

namespace {

MlmcEstimate run(const ScaledModel& model, const Observable& f, const MlmcOptions& options,
                 EstimatorKind kind) {
  if (f.weights().size() != model.network.species_count()) {
    throw InvalidArgument("observable does not match the model's species");
  }
  if (options.pilot_paths < 2) throw InvalidArgument("pilot needs at least 2 paths per level");

  MlmcEstimate result;
  result.kind = kind;
  result.eps = options.eps;
  result.schedule = build_schedule(options.t_end, options.refinement, options.eps, options.theta);
  const LevelSchedule& schedule = result.schedule;

  std::vector<std::pair<LevelKind, int>> terms;
  for (int level = schedule.base_level; level <= schedule.finest_level; ++level) {
    terms.emplace_back(level == schedule.base_level ? LevelKind::kBase : LevelKind::kInterior,
                       level);
  }
  if (kind == EstimatorKind::kUnbiased) {
    terms.emplace_back(LevelKind::kCorrection, schedule.finest_level);
  }

  const auto sample = [&](std::size_t term, std::uint64_t n, std::uint64_t first,
                          std::uint64_t seed) {
    SamplingOptions so{seed, options.workers, first, options.exact};
    if (terms[term].first == LevelKind::kCorrection) {
      return estimate_exact_correction(model, schedule, n, f, so);
    }
    return estimate_level(model, schedule, terms[term].second, n, f, so);
  };

  std::uint64_t pilot_cost = 0;
  if (options.allocation == AllocationMode::kAdaptive) {
    // Pilot paths are the first paths of each level and stay in the estimate.
    for (std::size_t t = 0; t < terms.size(); ++t) {
      result.levels.push_back(sample(t, options.pilot_paths, 0, options.seed));
    }
    const Allocation alloc = allocate_adaptive(result.levels, options.eps);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      if (alloc.paths[t] > options.pilot_paths) {
        result.levels[t].merge(
            sample(t, alloc.paths[t] - options.pilot_paths, options.pilot_paths, options.seed));
      }
    }
  } else {
    // Independent pilot at the base level calibrates cbar = V_0 N^(rho - gamma).
    const std::uint64_t pilot_seed = mix64(options.seed ^ 0x70696C6F74ULL);
    const LevelStatistics pilot = sample(0, options.pilot_paths, 0, pilot_seed);
    pilot_cost = pilot.cost;
    const double calibration =
        pilot.variance() * std::pow(model.scaling.N, model.scaling.rho - model.scaling.gamma);
    const Allocation alloc =
        allocate_paper(schedule, model.scaling, options.eps, calibration, kind);
    for (std::size_t t = 0; t < terms.size(); ++t) {
      result.levels.push_back(sample(t, alloc.paths[t], 0, options.seed));
    }
  }

  CompensatedSum estimate;
  CompensatedSum variance;
  result.total_cost = pilot_cost;
  for (const auto& level : result.levels) {
    estimate.add(level.mean());
    variance.add(level.variance() / static_cast<double>(level.paths()));
    result.total_cost += level.cost;
  }
  result.estimate = estimate.value();
  result.variance = variance.value();
  result.shortfall = result.variance > options.eps * options.eps;
  if (result.shortfall) {
    result.warnings.push_back("allocation shortfall: achieved variance exceeds eps^2");
  }
  const double finest_steps_per_time = 1.0 / schedule.step(schedule.finest_level);
  if (finest_steps_per_time > exact_cost_estimate(model.scaling)) {
    result.warnings.push_back("1/h_L exceeds the exact-path cost estimate N-bar");
  }
  return result;
}

}  // namespace

MlmcEstimate run_biased(const ScaledModel& model, const Observable& f,
                        const MlmcOptions& options) {
  return run(model, f, options, EstimatorKind::kBiased);
}

MlmcEstimate run_unbiased(const ScaledModel& model, const Observable& f,
                          const MlmcOptions& options) {
  return run(model, f, options, EstimatorKind::kUnbiased);
}

}  // namespace taumlmc
