#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace sonolab {

/// Worker cap: SONOLAB_THREADS if set and positive, else hardware concurrency.
std::size_t max_threads();

/// Runs fn(begin, end) over contiguous index blocks. Every index is visited by
/// exactly one worker, so per-index writes are deterministic whatever the
/// worker count.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_block = 256) {
  if (n == 0) return;
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(max_threads(), (n + min_block - 1) / min_block));
  if (workers == 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = n * w / workers;
    const std::size_t end = n * (w + 1) / workers;
    threads.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace sonolab
