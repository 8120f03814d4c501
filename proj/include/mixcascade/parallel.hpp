#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mixcascade {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Work items are
/// assigned round-robin; callers write results into per-index slots, so the
/// output never depends on the worker count. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  workers = std::max(1u, workers);
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t n_threads = std::min<std::size_t>(workers, count);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> threads;
  threads.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) {
    threads.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += n_threads) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mixcascade
