#pragma once

#include <array>
#include <cstdint>

namespace taumlmc {

/// The three unit-rate Poisson processes driving one reaction of a coupled
/// pair: the shared minimum-rate stream and the two residual streams.
/// Single-process simulations draw from kShared.
enum class Channel : std::uint8_t { kShared = 1, kFirst = 2, kSecond = 3 };

/// Level id reserved for the exact/tau correction term.
inline constexpr std::int32_t kCorrectionLevel = -1;

struct StreamKey {
  std::uint64_t master_seed = 0;
  std::int32_t level = 0;
  std::uint64_t path_index = 0;
  std::uint32_t reaction = 0;
  Channel channel = Channel::kShared;
};

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream. The key is hashed into the Philox key and the
/// upper half of the counter; the lower half counts blocks drawn so far, so a
/// stream is a pure function of its StreamKey.
class RandomStream {
 public:
  explicit RandomStream(const StreamKey& key);

  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double next_uniform();

 private:
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t counter_high_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // 64-bit words left in buffer_
};

RandomStream stream_for(const StreamKey& key);

/// Identifies the stream family of one simulated path; channel and reaction
/// are filled in by the simulators.
struct PathStreams {
  std::uint64_t master_seed = 0;
  std::int32_t level = 0;
  std::uint64_t path_index = 0;

  StreamKey key(std::uint32_t reaction, Channel channel) const {
    return StreamKey{master_seed, level, path_index, reaction, channel};
  }
};

/// Exact Poisson variate: sequential-search inversion below mean 10,
/// Hormann's transformed rejection (PTRS) at or above. Mean 0 returns 0
/// without consuming randomness. Throws InvalidMean for negative or
/// non-finite means.
std::int64_t poisson_sample(RandomStream& stream, double mean);

/// Exponential variate with the given rate; strictly positive and finite.
/// Throws InvalidRate when rate <= 0 or not finite.
double exponential_sample(RandomStream& stream, double rate);

/// log(k!) for k >= 0.
double log_factorial(std::int64_t k);

/// SplitMix64 finalizer; used to derive seeds and keys.
std::uint64_t mix64(std::uint64_t x);

}  // namespace taumlmc
