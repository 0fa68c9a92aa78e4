#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace ptlab {

// Runs f(0) ... f(n-1) on up to `threads` workers. Each invocation must write
// only to its own slot of a pre-sized results container (and must not throw),
// so the assembled output is independent of the scheduling order.
template <typename F>
void parallel_for(int n, int threads, const F& f) {
  threads = std::max(1, std::min(threads, n));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (int w = 0; w < threads; ++w)
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) f(i);
    });
  for (std::thread& w : workers) w.join();
}

}  // namespace ptlab
