#include "rbmc/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace rbmc {

namespace {
std::atomic<int> g_workers{1};
}

int worker_threads() { return g_workers.load(); }

void set_worker_threads(int n) {
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  g_workers.store(std::max(1, n));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
  const int t = std::min<std::size_t>(static_cast<std::size_t>(worker_threads()), std::max<std::size_t>(n, 1));
  if (t <= 1 || n == 0) {
    fn(0, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + static_cast<std::size_t>(t) - 1) / static_cast<std::size_t>(t);
  for (int i = 1; i < t; ++i) {
    const std::size_t lo = chunk * static_cast<std::size_t>(i);
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  fn(0, std::min(n, chunk));
  for (auto& th : pool) th.join();
}

}  // namespace rbmc
