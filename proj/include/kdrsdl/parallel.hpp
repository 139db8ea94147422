#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "kdrsdl/tensor.hpp"

namespace kdrsdl {

/// Runs fn(i) for every i in [0, count), split into contiguous chunks over
/// at most `threads` workers. fn must only touch per-index state. The first
/// exception thrown by any worker is rethrown on the calling thread.
template <typename Fn>
void parallel_for(Index count, int threads, Fn&& fn) {
  const Index workers = std::min<Index>(std::max(threads, 1), count);
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const Index chunk = (count + workers - 1) / workers;
  for (Index w = 0; w < workers; ++w) {
    const Index begin = w * chunk;
    const Index end = std::min(count, begin + chunk);
    pool.emplace_back([&, begin, end] {
      try {
        for (Index i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();  // joins
  if (failure) std::rethrow_exception(failure);
}

}  // namespace kdrsdl
