#pragma once

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace hexmg {

/// Runs fn(begin, end) over [0, n) split into contiguous chunks, one per
/// worker. Chunk boundaries depend only on (n, num_threads), and callers are
/// expected to write to disjoint, index-owned storage, so results are
/// bit-identical for any thread count.
template <class Fn>
void parallel_for(int n, int num_threads, Fn&& fn) {
  num_threads = std::max(1, num_threads);
  if (n <= 0) return;
  if (num_threads == 1 || n == 1) {
    fn(0, n);
    return;
  }
  int workers = std::min(num_threads, n);
  int chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::vector<std::exception_ptr> errors(workers);
  for (int w = 0; w < workers; ++w) {
    int begin = w * chunk;
    int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        fn(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hexmg
