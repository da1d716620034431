#include "dkp/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dkp {

namespace {

int env_thread_count() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* s = std::getenv("DKP_THREADS")) {
    const int v = std::atoi(s);
    if (v >= 1) return std::min(v, hw);
  }
  return hw;
}

std::atomic<int> g_override{0};

constexpr std::size_t kChunk = 2048;

}  // namespace

int thread_count() {
  const int o = g_override.load(std::memory_order_relaxed);
  return o >= 1 ? o : env_thread_count();
}

void set_thread_count(int n) { g_override.store(n, std::memory_order_relaxed); }

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& f) {
  if (n == 0) return;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  const int workers = std::min<std::size_t>(thread_count(), chunks);
  if (workers <= 1) {
    f(0, n);
    return;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t c = next.fetch_add(1, std::memory_order_relaxed);
      if (c >= chunks) return;
      const std::size_t b = c * kChunk;
      f(b, std::min(n, b + kChunk));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int i = 0; i < workers - 1; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

ArgMax parallel_argmax(std::size_t n, const std::function<double(std::size_t)>& value) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<ArgMax> partial(chunks, ArgMax{0.0, n});
  parallel_chunks(n, [&](std::size_t b, std::size_t e) {
    ArgMax best{value(b), b};
    for (std::size_t i = b + 1; i < e; ++i) {
      const double v = value(i);
      if (v > best.value) best = ArgMax{v, i};
    }
    partial[b / kChunk] = best;
  });
  ArgMax best = partial[0];
  for (std::size_t c = 1; c < chunks; ++c)
    if (partial[c].value > best.value) best = partial[c];
  return best;
}

}  // namespace dkp
