#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace gmg {

// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index is
// handled exactly once; if any calls throw, the exception of the smallest
// failing index is rethrown after all workers finish, so failures surface in
// the same order regardless of scheduling.
template <class Body>
void parallel_for(std::size_t count, unsigned jobs, Body &&body) {
  std::vector<std::exception_ptr> errors(count);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(std::max(jobs, 1u), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            body(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace gmg
