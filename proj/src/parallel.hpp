#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace oulcut::detail {

inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; results are keyed by index, so the
// outcome does not depend on scheduling. The first exception is rethrown.
template <class Fn>
void parallel_for(long n, int workers, Fn&& fn) {
  const int w = std::max(1, std::min<int>(resolve_workers(workers), static_cast<int>(n)));
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  auto work = [&]() {
    for (long i; (i = next++) < n && !failed;) {
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (w == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < w; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace oulcut::detail
