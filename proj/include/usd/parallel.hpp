// Copyright (c) 2026, The USD Lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace usd {

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested != 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs fn(begin, end) over contiguous chunks of [0, n). Chunks never share
// output slots, so results are independent of the thread count. The first
// exception thrown by any chunk is rethrown after all threads join.
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::min(resolve_threads(threads), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    const std::size_t step = (n + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(n, t * step);
      const std::size_t end = std::min(n, begin + step);
      pool.emplace_back([&, t, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace usd
