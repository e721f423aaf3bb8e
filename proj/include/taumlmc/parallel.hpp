#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace taumlmc {

/// Paths are grouped in chunks of this size. Chunk boundaries depend only on
/// the index range, never on the worker count, which is what makes reductions
/// over chunk results reproducible.
inline constexpr std::uint64_t kChunkSize = 512;

/// 0 means "all available cores".
inline unsigned resolve_workers(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Evaluates fn(chunk_begin, chunk_end) over [begin, end) split into fixed
/// chunks and returns the results in chunk order. If any chunk throws, the
/// exception of the lowest-numbered failing chunk is rethrown.
template <class Result, class Fn>
std::vector<Result> map_chunks(std::uint64_t begin, std::uint64_t end, unsigned workers, Fn fn,
                               std::uint64_t chunk = kChunkSize) {
  if (end <= begin) return {};
  const std::uint64_t chunks = (end - begin + chunk - 1) / chunk;
  std::vector<Result> results(chunks);
  std::vector<std::exception_ptr> errors(chunks);
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> failed{false};

  auto work = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks || failed.load()) return;
      const std::uint64_t b = begin + c * chunk;
      const std::uint64_t e = std::min(end, b + chunk);
      try {
        results[c] = fn(b, e);
      } catch (...) {
        errors[c] = std::current_exception();
        failed.store(true);
      }
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_workers(workers), chunks));
  if (n_threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads - 1);
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(work);
    work();
  }
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return results;
}

}  // namespace taumlmc
