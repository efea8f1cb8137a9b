#include "cscae/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace cscae {

namespace {

int read_env_budget() {
  const char* env = std::getenv("CSCAE_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return std::max(1, n);
}

std::atomic<int> g_budget{0};  // 0 = not yet read from env

}  // namespace

int thread_budget() {
  int b = g_budget.load(std::memory_order_relaxed);
  if (b == 0) {
    b = read_env_budget();
    g_budget.store(b, std::memory_order_relaxed);
  }
  return b;
}

void set_thread_budget(int n) {
  g_budget.store(std::max(1, n), std::memory_order_relaxed);
}

void parallel_chunks(std::int64_t n,
                     const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  const int workers = static_cast<int>(
      std::min<std::int64_t>(thread_budget(), n));
  if (workers <= 1) {
    fn(0, n);
    return;
  }
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  for (int w = 1; w < workers; ++w) {
    const std::int64_t begin = w * chunk;
    const std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(0, std::min<std::int64_t>(chunk, n));
  for (auto& t : pool) t.join();
}

}  // namespace cscae
