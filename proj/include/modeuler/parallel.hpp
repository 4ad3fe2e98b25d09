#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace modeuler {

/// Process-wide worker bound (set once from the CLI --threads flag).
inline int& detail_thread_count() {
  static int n = static_cast<int>(std::thread::hardware_concurrency());
  return n;
}
inline int default_threads() { return detail_thread_count() > 0 ? detail_thread_count() : 1; }
inline void set_default_threads(int n) { detail_thread_count() = n > 0 ? n : 1; }

/// Run body(i) for i in [0, n). Work is split into contiguous index blocks,
/// one per worker; each body(i) must write only to its own slot so results
/// are identical for any thread count. Reductions stay with the caller, in
/// index order.
template <class F>
void parallel_for(std::size_t n, F&& body, int threads = 0) {
  if (threads <= 0) threads = default_threads();
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace modeuler
