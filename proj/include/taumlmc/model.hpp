#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace taumlmc {

/// One reaction: input and output stoichiometry plus a mass-action rate constant.
struct Reaction {
  std::vector<std::int64_t> inputs;   // nu_k, one entry per species
  std::vector<std::int64_t> outputs;  // nu'_k
  double rate = 0.0;                  // kappa_k, unscaled units
};

/// Species list and reactions. Immutable once constructed.
///
/// The reaction vectors zeta_k = nu'_k - nu_k are computed from the
/// stoichiometry at construction and cannot be set independently.
class ReactionNetwork {
 public:
  /// A single reactant requirement of a reaction.
  struct Reactant {
    std::size_t species;
    std::int64_t count;
  };

  ReactionNetwork(std::vector<std::string> species, std::vector<Reaction> reactions);

  std::size_t species_count() const noexcept { return species_.size(); }
  std::size_t reaction_count() const noexcept { return reactions_.size(); }

  const std::vector<std::string>& species() const noexcept { return species_; }
  const std::vector<Reaction>& reactions() const noexcept { return reactions_; }
  const Reaction& reaction(std::size_t k) const { return reactions_.at(k); }

  std::optional<std::size_t> species_index(const std::string& name) const;

  /// zeta_k as a dense row of length d.
  std::span<const std::int64_t> reaction_vector(std::size_t k) const;

  /// Species touched by reaction k (nonzero entries of zeta_k).
  std::span<const std::size_t> changed_species(std::size_t k) const;

  /// Species with nonzero input stoichiometry for reaction k.
  std::span<const Reactant> reactants(std::size_t k) const;

  bool operator==(const ReactionNetwork& other) const;

 private:
  std::vector<std::string> species_;
  std::vector<Reaction> reactions_;
  std::vector<std::int64_t> zeta_;  // K x d, row-major
  std::vector<std::vector<std::size_t>> changed_;
  std::vector<std::vector<Reactant>> reactants_;
};

/// Unscaled copy numbers. Scaled views are computed on demand from a ScalingProfile.
struct SystemState {
  std::vector<std::int64_t> counts;

  bool operator==(const SystemState&) const = default;
};

/// System-size scaling of a network: N, the species exponents alpha_i and
/// everything derived from them.
///
/// Intensities factor as lambda_k(X) = N^(gamma + c_k) * lambda_k^N(X^N) with
/// lambda_k^N(x) = coefficient_k * prod_i prod_{j < nu_ki} (x_i - j N^-alpha_i).
struct ScalingProfile {
  double N = 1.0;
  std::vector<double> alpha;         // per species
  std::vector<double> r;             // per reaction
  std::vector<double> rho_k;         // per reaction
  double rho = 0.0;
  double gamma = 0.0;
  std::vector<double> c;             // per reaction, c_k = r_k - gamma
  std::vector<double> coefficient;   // per reaction, kappa_k N^(sum_i alpha_i nu_ki - r_k)
  std::vector<double> species_scale; // per species, N^-alpha_i
  std::vector<std::vector<double>> zeta_scaled;  // K x d, N^-alpha_i zeta_ki

  /// N^(gamma + c_k).
  double intensity_factor(std::size_t k) const;
};

/// A network together with its initial condition and scaling inputs.
struct Model {
  ReactionNetwork network;
  SystemState initial;
  double N = 1.0;
  std::vector<double> alpha;
};

/// A network with its derived scaling and initial state, ready to simulate.
struct ScaledModel {
  ReactionNetwork network;
  ScalingProfile scaling;
  SystemState initial;
};

/// Mass-action propensity lambda_k(x) for integer copy numbers.
///
/// Zero whenever any species count is below that reaction's input
/// stoichiometry; a negative count of any species therefore zeroes the
/// propensity of every reaction.
double propensity(const ReactionNetwork& network, std::size_t k,
                  std::span<const std::int64_t> counts);
std::vector<double> propensity(const ReactionNetwork& network,
                               std::span<const std::int64_t> counts);
void propensity_into(const ReactionNetwork& network, std::span<const std::int64_t> counts,
                     std::span<double> out);

/// Scaled intensity lambda_k^N at a (real) scaled state. Clamped to zero when
/// any coordinate is negative or the implied copy number is below the input
/// stoichiometry.
double scaled_propensity(const ReactionNetwork& network, const ScalingProfile& scaling,
                         std::size_t k, std::span<const double> scaled_state);
std::vector<double> scaled_propensity(const ReactionNetwork& network,
                                      const ScalingProfile& scaling,
                                      std::span<const double> scaled_state);

/// Rounds an exponent to a nearby rational with denominator <= 12 when it is
/// within 1e-9 of one; otherwise returns it unchanged.
double snap_exponent(double exponent);

/// Derives r_k, rho_k, rho, gamma, c_k and the scaled reaction vectors.
/// Throws UnsupportedScaling when gamma > 0 and InvalidArgument on N < 1 or
/// negative alpha. N = 1 yields the trivial profile with every r_k = 0.
ScalingProfile derive_scaling(const ReactionNetwork& network, double N,
                              std::span<const double> alpha);

/// N-bar = N^gamma sum_k N^c_k, the order of magnitude of jumps along one exact path.
double exact_cost_estimate(const ScalingProfile& scaling);

/// True iff w . zeta_k <= 0 for every reaction.
bool check_conservation(const ReactionNetwork& network, std::span<const double> weights);

std::vector<double> scaled_view(const SystemState& state, const ScalingProfile& scaling);

/// The drift F^N(x) = sum_k N^(gamma + c_k) lambda_k^N(x) zeta_k^N.
std::vector<double> mean_field_drift(const ReactionNetwork& network,
                                     const ScalingProfile& scaling,
                                     std::span<const double> scaled_state);

ScaledModel make_scaled(const Model& model);

}  // namespace taumlmc
