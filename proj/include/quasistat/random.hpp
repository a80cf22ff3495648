#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace quasistat {

/// Random stream used by every sampler. Samplers take it by reference and
/// never touch global state.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed splitting: stream (tag, index) under a master seed is seeded with
///   splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index).
/// Distinct tags separate purposes (e.g. "before" vs "after" ensembles);
/// the index enumerates replicas or permutations.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t tag,
                                    std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index);
}

inline Rng make_stream(std::uint64_t master, std::uint64_t tag,
                       std::uint64_t index) {
  return Rng(stream_seed(master, tag, index));
}

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [0, n) over `workers` threads. Each index must write
/// only to its own output slot; results are then independent of the worker
/// count. The first exception thrown by any fn is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(
                                                         std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace quasistat
