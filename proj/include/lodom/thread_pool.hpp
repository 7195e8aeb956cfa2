#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace lodom {

/// Fork-join pool for row-granular data parallelism.
///
/// Work is split into fixed chunks whose boundaries depend only on the item
/// count, never on the worker count. Workers grab chunk indices from an
/// atomic counter; callers that need a reduction write per-chunk partials
/// and combine them in chunk order, which keeps every result bit-identical
/// for any number of workers.
class ThreadPool {
 public:
  explicit ThreadPool(int workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int workers() const { return workers_; }

  /// Runs fn(chunk_index, begin, end) over [begin, end) split into chunks of
  /// `chunk` items. Blocks until all chunks are done. The calling thread
  /// participates.
  void parallel_chunks(int begin, int end, int chunk,
                       const std::function<void(int, int, int)>& fn);

  static int chunk_count(int begin, int end, int chunk) {
    const int n = end - begin;
    if (n <= 0) return 0;
    return (n + chunk - 1) / chunk;
  }

 private:
  void worker_loop();

  int workers_ = 1;
  std::vector<std::thread> threads_;

  std::mutex mu_;
  std::condition_variable cv_work_;
  std::condition_variable cv_done_;
  bool stop_ = false;

  // Current job
  std::uint64_t job_id_ = 0;
  int job_begin_ = 0, job_end_ = 0, job_chunk_ = 1;
  const std::function<void(int, int, int)>* job_fn_ = nullptr;
  std::atomic<int> next_chunk_{0};
  int chunks_total_ = 0;
  std::atomic<int> chunks_done_{0};
};

}  // namespace lodom
