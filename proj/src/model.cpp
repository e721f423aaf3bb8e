#include "taumlmc/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>
#include <utility>

#include "taumlmc/error.hpp"

namespace taumlmc {

ReactionNetwork::ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions)
    : species_(std::move(species)), reactions_(std::move(reactions)) {
  const std::size_t d = species_.size();
  if (d == 0) throw InvalidArgument("network needs at least one species");
  if (reactions_.empty()) throw InvalidArgument("network needs at least one reaction");

  std::unordered_set<std::string> seen;
  for (const auto& name : species_) {
    if (!seen.insert(name).second) throw InvalidArgument("duplicate species '" + name + "'");
  }

  zeta_.assign(reactions_.size() * d, 0);
  changed_.resize(reactions_.size());
  reactants_.resize(reactions_.size());
  for (std::size_t k = 0; k < reactions_.size(); ++k) {
    const Reaction& rx = reactions_[k];
    if (rx.inputs.size() != d || rx.outputs.size() != d) {
      throw InvalidArgument("reaction " + std::to_string(k) + " has stoichiometry of wrong length");
    }
    if (!(rx.rate > 0.0) || !std::isfinite(rx.rate)) {
      throw InvalidArgument("reaction " + std::to_string(k) + " needs a positive finite rate");
    }
    for (std::size_t i = 0; i < d; ++i) {
      if (rx.inputs[i] < 0 || rx.outputs[i] < 0) {
        throw InvalidArgument("negative stoichiometry in reaction " + std::to_string(k));
      }
      const std::int64_t z = rx.outputs[i] - rx.inputs[i];
      zeta_[k * d + i] = z;
      if (z != 0) changed_[k].push_back(i);
      if (rx.inputs[i] > 0) reactants_[k].push_back({i, rx.inputs[i]});
    }
  }
}

std::optional<std::size_t> ReactionNetwork::species_index(const std::string& name) const {
  const auto it = std::find(species_.begin(), species_.end(), name);
  if (it == species_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - species_.begin());
}

std::span<const std::int64_t> ReactionNetwork::reaction_vector(std::size_t k) const {
  const std::size_t d = species_.size();
  return std::span<const std::int64_t>(zeta_).subspan(k * d, d);
}

std::span<const std::size_t> ReactionNetwork::changed_species(std::size_t k) const {
  return changed_.at(k);
}

std::span<const ReactionNetwork::Reactant> ReactionNetwork::reactants(std::size_t k) const {
  return reactants_.at(k);
}

bool ReactionNetwork::operator==(const ReactionNetwork& other) const {
  if (species_ != other.species_ || reactions_.size() != other.reactions_.size()) return false;
  for (std::size_t k = 0; k < reactions_.size(); ++k) {
    const Reaction& a = reactions_[k];
    const Reaction& b = other.reactions_[k];
    if (a.inputs != b.inputs || a.outputs != b.outputs || a.rate != b.rate) return false;
  }
  return true;
}

double ScalingProfile::intensity_factor(std::size_t k) const {
  return std::pow(N, gamma + c.at(k));
}

namespace {

bool any_negative(std::span<const std::int64_t> counts) {
  return std::any_of(counts.begin(), counts.end(), [](std::int64_t x) { return x < 0; });
}

double mass_action(const ReactionNetwork& network, std::size_t k,
                   std::span<const std::int64_t> counts) {
  double value = network.reactions()[k].rate;
  for (const auto& [i, nu] : network.reactants(k)) {
    const std::int64_t x = counts[i];
    if (x < nu) return 0.0;
    for (std::int64_t j = 0; j < nu; ++j) value *= static_cast<double>(x - j);
  }
  return value;
}

}  // namespace

double propensity(const ReactionNetwork& network, std::size_t k,
                  std::span<const std::int64_t> counts) {
  if (counts.size() != network.species_count()) {
    throw InvalidArgument("state has wrong number of species");
  }
  if (any_negative(counts)) return 0.0;
  return mass_action(network, k, counts);
}

std::vector<double> propensity(const ReactionNetwork& network,
                               std::span<const std::int64_t> counts) {
  std::vector<double> out(network.reaction_count());
  propensity_into(network, counts, out);
  return out;
}

void propensity_into(const ReactionNetwork& network, std::span<const std::int64_t> counts,
                     std::span<double> out) {
  if (counts.size() != network.species_count()) {
    throw InvalidArgument("state has wrong number of species");
  }
  if (any_negative(counts)) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  for (std::size_t k = 0; k < network.reaction_count(); ++k) out[k] = mass_action(network, k, counts);
}

double scaled_propensity(const ReactionNetwork& network, const ScalingProfile& scaling,
                         std::size_t k, std::span<const double> scaled_state) {
  if (scaled_state.size() != network.species_count()) {
    throw InvalidArgument("state has wrong number of species");
  }
  for (double x : scaled_state) {
    if (x < 0.0) return 0.0;
  }
  double value = scaling.coefficient.at(k);
  for (const auto& [i, nu] : network.reactants(k)) {
    const double x = scaled_state[i];
    const double unit = scaling.species_scale[i];
    // Implied copy number below the input stoichiometry.
    if (x < static_cast<double>(nu) * unit * (1.0 - 1e-12)) return 0.0;
    for (std::int64_t j = 0; j < nu; ++j) value *= x - static_cast<double>(j) * unit;
  }
  return std::max(value, 0.0);
}

std::vector<double> scaled_propensity(const ReactionNetwork& network,
                                      const ScalingProfile& scaling,
                                      std::span<const double> scaled_state) {
  std::vector<double> out(network.reaction_count());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = scaled_propensity(network, scaling, k, scaled_state);
  }
  return out;
}

double snap_exponent(double exponent) {
  for (int q = 1; q <= 12; ++q) {
    const double p = std::round(exponent * q);
    const double candidate = p / q;
    if (std::abs(exponent - candidate) <= 1e-9) return candidate;
  }
  return exponent;
}

ScalingProfile derive_scaling(const ReactionNetwork& network, double N,
                              std::span<const double> alpha) {
  const std::size_t d = network.species_count();
  const std::size_t K = network.reaction_count();
  if (!std::isfinite(N) || N < 1.0) throw InvalidArgument("system size N must be >= 1");
  if (alpha.size() != d) throw InvalidArgument("alpha needs one exponent per species");
  for (double a : alpha) {
    if (!std::isfinite(a) || a < 0.0) throw InvalidArgument("alpha exponents must be >= 0");
  }

  ScalingProfile s;
  s.N = N;
  s.alpha.assign(alpha.begin(), alpha.end());
  s.species_scale.resize(d);
  for (std::size_t i = 0; i < d; ++i) s.species_scale[i] = std::pow(N, -alpha[i]);

  const double inf = std::numeric_limits<double>::infinity();
  s.r.resize(K);
  s.rho_k.resize(K);
  s.c.resize(K);
  s.coefficient.resize(K);
  s.zeta_scaled.assign(K, std::vector<double>(d, 0.0));

  const bool trivial = (N == 1.0);
  const double log_n = trivial ? 0.0 : std::log(N);
  std::vector<double> order(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const Reaction& rx = network.reaction(k);
    for (std::size_t i = 0; i < d; ++i) order[k] += alpha[i] * static_cast<double>(rx.inputs[i]);
    s.r[k] = trivial ? 0.0 : snap_exponent(std::log(rx.rate) / log_n + order[k]);

    double rho_k = inf;
    const auto zeta = network.reaction_vector(k);
    for (std::size_t i = 0; i < d; ++i) {
      s.zeta_scaled[k][i] = static_cast<double>(zeta[i]) * s.species_scale[i];
      if (zeta[i] != 0) rho_k = std::min(rho_k, alpha[i]);
    }
    s.rho_k[k] = rho_k;
  }

  double gamma = -inf;
  double rho = inf;
  for (std::size_t k = 0; k < K; ++k) {
    if (!std::isfinite(s.rho_k[k])) continue;  // reaction changes nothing
    gamma = std::max(gamma, s.r[k] - s.rho_k[k]);
    rho = std::min(rho, s.rho_k[k]);
  }
  if (!std::isfinite(gamma)) gamma = 0.0;
  if (!std::isfinite(rho)) rho = 0.0;
  gamma = snap_exponent(gamma);
  if (gamma > 1e-9) {
    throw UnsupportedScaling("time-scale exponent gamma = " + std::to_string(gamma) +
                             " > 0 is not supported");
  }
  s.gamma = gamma;
  s.rho = rho;
  for (std::size_t k = 0; k < K; ++k) {
    s.c[k] = s.r[k] - gamma;
    s.coefficient[k] = network.reaction(k).rate * std::pow(N, order[k] - s.r[k]);
  }
  return s;
}

double exact_cost_estimate(const ScalingProfile& scaling) {
  double sum = 0.0;
  for (double ck : scaling.c) sum += std::pow(scaling.N, ck);
  return std::pow(scaling.N, scaling.gamma) * sum;
}

bool check_conservation(const ReactionNetwork& network, std::span<const double> weights) {
  const std::size_t d = network.species_count();
  if (weights.size() != d) throw InvalidArgument("weights need one entry per species");
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidArgument("conservation weights must be positive");
  }
  for (std::size_t k = 0; k < network.reaction_count(); ++k) {
    const auto zeta = network.reaction_vector(k);
    double dot = 0.0;
    double magnitude = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      dot += weights[i] * static_cast<double>(zeta[i]);
      magnitude += std::abs(weights[i] * static_cast<double>(zeta[i]));
    }
    if (dot > 1e-12 * magnitude) return false;
  }
  return true;
}

std::vector<double> scaled_view(const SystemState& state, const ScalingProfile& scaling) {
  if (state.counts.size() != scaling.species_scale.size()) {
    throw InvalidArgument("state and scaling disagree on species count");
  }
  std::vector<double> x(state.counts.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = static_cast<double>(state.counts[i]) * scaling.species_scale[i];
  }
  return x;
}

std::vector<double> mean_field_drift(const ReactionNetwork& network,
                                     const ScalingProfile& scaling,
                                     std::span<const double> scaled_state) {
  std::vector<double> drift(network.species_count(), 0.0);
  for (std::size_t k = 0; k < network.reaction_count(); ++k) {
    const double rate =
        scaling.intensity_factor(k) * scaled_propensity(network, scaling, k, scaled_state);
    if (rate == 0.0) continue;
    for (std::size_t i : network.changed_species(k)) drift[i] += rate * scaling.zeta_scaled[k][i];
  }
  return drift;
}

ScaledModel make_scaled(const Model& model) {
  if (model.initial.counts.size() != model.network.species_count()) {
    throw InvalidArgument("initial state has wrong number of species");
  }
  return ScaledModel{model.network, derive_scaling(model.network, model.N, model.alpha),
                     model.initial};
}

}  // namespace taumlmc
