#include "perchomog/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

namespace perchomog {

int effective_workers(int requested, int64_t n_tasks) {
  int w = requested > 0 ? requested : 1;
  unsigned hw = std::thread::hardware_concurrency();
  if (hw > 0) w = std::min<int>(w, static_cast<int>(hw) * 4);
  if (n_tasks >= 0) w = static_cast<int>(std::min<int64_t>(w, std::max<int64_t>(n_tasks, 1)));
  return std::max(w, 1);
}

void parallel_for_index(int64_t n, int workers, const std::function<void(int64_t)>& task) {
  if (n <= 0) return;
  const int w = effective_workers(workers, n);
  if (w <= 1) {
    for (int64_t i = 0; i < n; ++i) task(i);
    return;
  }

  std::atomic<int64_t> next{0};
  std::mutex mu;
  int64_t first_failed = -1;
  std::exception_ptr error;

  auto body = [&] {
    while (true) {
      const int64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (first_failed < 0 || i < first_failed) {
          first_failed = i;
          error = std::current_exception();
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(w));
  for (int t = 0; t < w; ++t) pool.emplace_back(body);
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace perchomog
