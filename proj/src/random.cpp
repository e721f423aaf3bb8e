#include "taumlmc/random.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "taumlmc/error.hpp"

namespace taumlmc {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  constexpr std::uint64_t kMul0 = 0xD2511F53;
  constexpr std::uint64_t kMul1 = 0xCD9E8D57;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = kMul0 * ctr[0];
    const std::uint64_t p1 = kMul1 * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
  }
  return ctr;
}

RandomStream::RandomStream(const StreamKey& k) {
  std::uint64_t h = mix64(k.master_seed);
  h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.level)));
  h = mix64(h ^ k.path_index);
  h = mix64(h ^ (static_cast<std::uint64_t>(k.reaction) << 8 |
                 static_cast<std::uint64_t>(k.channel)));
  const std::uint64_t second = mix64(h ^ 0x5851F42D4C957F2DULL);
  key_ = {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  counter_high_ = second;
}

std::uint64_t RandomStream::next_u64() {
  if (buffered_ == 0) {
    buffer_ = philox4x32({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                          static_cast<std::uint32_t>(counter_high_),
                          static_cast<std::uint32_t>(counter_high_ >> 32)},
                         key_);
    ++block_;
    buffered_ = 2;
  }
  const int at = (2 - buffered_) * 2;
  --buffered_;
  return static_cast<std::uint64_t>(buffer_[at]) << 32 | buffer_[at + 1];
}

double RandomStream::next_uniform() {
  // 53 random bits centred in their cell: (m + 0.5) / 2^53.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

RandomStream stream_for(const StreamKey& key) { return RandomStream(key); }

namespace {

constexpr int kTableSize = 256;

struct LogFactorialTable {
  std::array<double, kTableSize> values{};
  LogFactorialTable() {
    values[0] = 0.0;
    for (int k = 1; k < kTableSize; ++k) values[k] = values[k - 1] + std::log(static_cast<double>(k));
  }
};

const LogFactorialTable& table() {
  static const LogFactorialTable t;
  return t;
}

std::int64_t poisson_inversion(RandomStream& stream, double mean) {
  const double u = stream.next_uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::int64_t k = 0;
  // The tail beyond k = 200 has probability below 1e-150 at mean < 10.
  while (u > cdf && k < 200) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// W. Hormann, "The transformed rejection method for generating Poisson
// random variables", Insurance: Mathematics and Economics 12 (1993).
std::int64_t poisson_ptrs(RandomStream& stream, double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = stream.next_uniform() - 0.5;
    const double v = stream.next_uniform();
    const double us = 0.5 - std::abs(u);
    const double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kd);
    if (kd < 0.0 || (us < 0.013 && v > us)) continue;
    const auto k = static_cast<std::int64_t>(kd);
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -mean + kd * loglam - log_factorial(k)) {
      return k;
    }
  }
}

}  // namespace

double log_factorial(std::int64_t k) {
  if (k < 0) throw InvalidArgument("log_factorial of negative integer");
  if (k < kTableSize) return table().values[static_cast<std::size_t>(k)];
  // Stirling series; the truncation error at k >= 256 is below 1e-16.
  const double x = static_cast<double>(k);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  return (x + 0.5) * std::log(x) - x + 0.91893853320467274178 +
         inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0)));
}

std::int64_t poisson_sample(RandomStream& stream, double mean) {
  if (!std::isfinite(mean) || mean < 0.0) {
    throw InvalidMean("Poisson mean must be finite and >= 0, got " + std::to_string(mean));
  }
  if (mean == 0.0) return 0;
  if (mean < 10.0) return poisson_inversion(stream, mean);
  return poisson_ptrs(stream, mean);
}

double exponential_sample(RandomStream& stream, double rate) {
  if (!std::isfinite(rate) || !(rate > 0.0)) {
    throw InvalidRate("exponential rate must be finite and > 0, got " + std::to_string(rate));
  }
  return -std::log(stream.next_uniform()) / rate;
}

}  // namespace taumlmc
