#pragma once

// Chunked parallel loops with deterministic reduction structure.
//
// Work is always divided into a fixed number of contiguous chunks that does
// not depend on the thread count. Callers that reduce must keep one buffer
// per chunk and fold them in chunk order; results are then identical no
// matter how many workers ran.

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace hexrec {

inline int worker_count() {
  if (const char* env = std::getenv("HEXREC_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

constexpr int kDefaultChunks = 32;

// Runs fn(chunk_index, begin, end) over [0, n) split into n_chunks contiguous
// ranges. fn must not touch shared mutable state except its own chunk slot.
inline void parallel_chunks(std::int64_t n,
                            const std::function<void(int, std::int64_t, std::int64_t)>& fn,
                            int n_chunks = kDefaultChunks) {
  if (n <= 0) return;
  if (n_chunks > n) n_chunks = static_cast<int>(n);
  const int workers = std::min(worker_count(), n_chunks);

  auto chunk_range = [&](int c, std::int64_t& b, std::int64_t& e) {
    b = n * c / n_chunks;
    e = n * (c + 1) / n_chunks;
  };

  if (workers <= 1) {
    for (int c = 0; c < n_chunks; ++c) {
      std::int64_t b, e;
      chunk_range(c, b, e);
      fn(c, b, e);
    }
    return;
  }

  std::atomic<int> next{0};
  auto body = [&]() {
    for (;;) {
      int c = next.fetch_add(1);
      if (c >= n_chunks) return;
      std::int64_t b, e;
      chunk_range(c, b, e);
      fn(c, b, e);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int i = 0; i + 1 < workers; ++i) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
}

}  // namespace hexrec
