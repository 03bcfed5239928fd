#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hetcov {

// Worker cap shared by all parallel loops; 0 means hardware concurrency.
inline std::atomic<int>& thread_limit() {
  static std::atomic<int> limit{0};
  return limit;
}

inline void set_thread_count(int n) { thread_limit() = std::max(0, n); }

inline int thread_count() {
  const int lim = thread_limit();
  if (lim > 0) return lim;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Splits [0, n) into fixed chunks of `chunk` items and calls f(chunk_id, begin, end)
// for each. Chunk boundaries never depend on the thread count, so callers that
// reduce per-chunk results in chunk order get identical results for any count.
template <typename F>
void parallel_chunks(std::size_t n, std::size_t chunk, F&& f) {
  if (n == 0) return;
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t n_chunks = (n + chunk - 1) / chunk;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n_chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) f(c, c * chunk, std::min(n, (c + 1) * chunk));
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t c = next++;
      if (c >= n_chunks) return;
      try {
        f(c, c * chunk, std::min(n, (c + 1) * chunk));
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n_chunks;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) { return (n + chunk - 1) / chunk; }

// Computes make(begin, end) for each fixed chunk of [0, n) and folds the
// partial results into `total` in chunk order. At most thread_count() partials
// are alive at once, which bounds memory for large per-chunk results.
template <typename T, typename Make, typename Fold>
void ordered_reduce(std::size_t n, std::size_t chunk, T& total, Make&& make, Fold&& fold) {
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t n_chunks = chunk_count(n, chunk);
  const std::size_t wave = static_cast<std::size_t>(thread_count());
  for (std::size_t c0 = 0; c0 < n_chunks; c0 += wave) {
    const std::size_t cnt = std::min(wave, n_chunks - c0);
    std::vector<T> partial(cnt);
    parallel_chunks(cnt, 1, [&](std::size_t i, std::size_t, std::size_t) {
      const std::size_t c = c0 + i;
      partial[i] = make(c * chunk, std::min(n, (c + 1) * chunk));
    });
    for (auto& p : partial) fold(total, p);
  }
}

}  // namespace hetcov
