#ifndef REITHOM_PARALLEL_HPP
#define REITHOM_PARALLEL_HPP

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace reithom {

/// Worker cap: HOMOG_THREADS when set, hardware concurrency otherwise.
inline int worker_count(int requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HOMOG_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(worker, begin, end) on contiguous chunks of [0, total). Chunking
/// depends only on the worker count, so results merged in index order do not
/// depend on scheduling. Exceptions propagate from the first failing chunk.
inline void parallel_chunks(long total, int workers,
                            const std::function<void(int, long, long)>& fn) {
  if (total <= 0) return;
  const int w = std::min<long>(std::max(1, workers), total);
  if (w == 1) {
    fn(0, 0, total);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(w));
  const long chunk = (total + w - 1) / w;
  for (int i = 0; i < w; ++i) {
    const long b = i * chunk, e = std::min(total, b + chunk);
    pool.emplace_back([&, i, b, e] {
      try {
        if (b < e) fn(i, b, e);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace reithom

#endif
