#pragma once

// Static-partition parallel map. Each index writes only its own slot, so the
// result is bit-identical for any worker count; callers do any order-
// sensitive folding serially afterwards.

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace raypos {

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (n == 0) return;
  std::size_t w = workers <= 1 ? 1 : static_cast<std::size_t>(workers);
  w = std::min(w, n);
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::vector<std::thread> threads;
  threads.reserve(w);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < w; ++t) {
    threads.emplace_back([&, t] {
      const std::size_t lo = n * t / w;
      const std::size_t hi = n * (t + 1) / w;
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace raypos
