#include "lodom/thread_pool.hpp"

#include <algorithm>

namespace lodom {

ThreadPool::ThreadPool(int workers) : workers_(std::max(1, workers)) {
  threads_.reserve(workers_ - 1);
  for (int i = 0; i < workers_ - 1; ++i) {
    threads_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::parallel_chunks(int begin, int end, int chunk,
                                 const std::function<void(int, int, int)>& fn) {
  chunk = std::max(1, chunk);
  const int total = chunk_count(begin, end, chunk);
  if (total == 0) return;
  if (workers_ == 1 || total == 1) {
    for (int c = 0; c < total; ++c) {
      const int b = begin + c * chunk;
      fn(c, b, std::min(end, b + chunk));
    }
    return;
  }

  {
    std::lock_guard<std::mutex> lock(mu_);
    ++job_id_;
    job_begin_ = begin;
    job_end_ = end;
    job_chunk_ = chunk;
    job_fn_ = &fn;
    chunks_total_ = total;
    next_chunk_.store(0, std::memory_order_relaxed);
    chunks_done_.store(0, std::memory_order_relaxed);
  }
  cv_work_.notify_all();

  // Caller participates.
  for (;;) {
    const int c = next_chunk_.fetch_add(1, std::memory_order_relaxed);
    if (c >= total) break;
    const int b = begin + c * chunk;
    fn(c, b, std::min(end, b + chunk));
    chunks_done_.fetch_add(1, std::memory_order_acq_rel);
  }

  std::unique_lock<std::mutex> lock(mu_);
  cv_done_.wait(lock, [this] {
    return chunks_done_.load(std::memory_order_acquire) >= chunks_total_;
  });
  job_fn_ = nullptr;
}

void ThreadPool::worker_loop() {
  std::uint64_t seen_job = 0;
  for (;;) {
    const std::function<void(int, int, int)>* fn = nullptr;
    int begin = 0, end = 0, chunk = 1, total = 0;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_work_.wait(lock, [&] {
        return stop_ || (job_fn_ != nullptr && job_id_ != seen_job);
      });
      if (stop_) return;
      seen_job = job_id_;
      fn = job_fn_;
      begin = job_begin_;
      end = job_end_;
      chunk = job_chunk_;
      total = chunks_total_;
    }
    for (;;) {
      const int c = next_chunk_.fetch_add(1, std::memory_order_relaxed);
      if (c >= total) break;
      const int b = begin + c * chunk;
      (*fn)(c, b, std::min(end, b + chunk));
      if (chunks_done_.fetch_add(1, std::memory_order_acq_rel) + 1 >= total) {
        cv_done_.notify_all();
      }
    }
  }
}

}  // namespace lodom
