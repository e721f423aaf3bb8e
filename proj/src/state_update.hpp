#pragma once

#include <cstdint>
#include <span>

#include "taumlmc/error.hpp"
#include "taumlmc/model.hpp"

namespace taumlmc::detail {

/// counts += times * zeta_k, failing hard on 64-bit overflow.
inline void apply_reaction(const ReactionNetwork& network, std::size_t k, std::int64_t times,
                           std::span<std::int64_t> counts) {
  if (times == 0) return;
  const auto zeta = network.reaction_vector(k);
  for (std::size_t i : network.changed_species(k)) {
    std::int64_t delta = 0;
    if (__builtin_mul_overflow(zeta[i], times, &delta) ||
        __builtin_add_overflow(counts[i], delta, &counts[i])) {
      throw StateOverflow("copy number of species " + network.species()[i] +
                          " overflowed 64 bits");
    }
  }
}

}  // namespace taumlmc::detail
