#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace asalpp {

inline int default_worker_count() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Work items are
/// claimed from a shared counter; callers index results by i so the gather
/// order is deterministic regardless of scheduling. The first exception is
/// rethrown after all threads join.
inline void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  if (workers <= 0) workers = default_worker_count();
  if (workers == 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  int spawn = std::min(workers, count);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(spawn));
  for (int t = 0; t < spawn; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace asalpp
