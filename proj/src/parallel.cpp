#include "rsi/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>
#include <vector>

namespace rsi {

namespace {
int g_threads = 1;
}

int parallel_threads() { return g_threads; }

void set_parallel_threads(int n) {
  if (n < 1)
    throw std::invalid_argument("set_parallel_threads: need n >= 1");
  g_threads = n;
}

void parallel_for(int count, const std::function<void(int)>& fn) {
  const int workers = std::min(g_threads, count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i)
      fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
        fn(i);
    });
  for (auto& t : pool)
    t.join();
}

} // namespace rsi
