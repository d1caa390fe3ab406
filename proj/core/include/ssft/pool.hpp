#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ssft {

inline int resolve_jobs(int requested, std::size_t work_items) {
  int jobs = requested > 0
                 ? requested
                 : static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  if (static_cast<std::size_t>(jobs) > work_items)
    jobs = static_cast<int>(work_items);
  return jobs;
}

// Runs fn(i) for i in [0, count) on a bounded worker pool. Work items must
// be independent; results keyed by index stay deterministic regardless of
// worker count. The first exception wins and is rethrown on the caller.
template <typename Fn>
void parallel_for_index(std::size_t count, int jobs, Fn&& fn) {
  if (count == 0) return;
  const int workers = resolve_jobs(jobs, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    threads.emplace_back([&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ssft
