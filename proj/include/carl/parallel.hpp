#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

// Deterministic data-parallel helper. Work is split into fixed-size chunks
// whose boundaries do not depend on the worker count; callers store per-chunk
// partial results into chunk-indexed slots and fold them in chunk order, so
// reductions are bit-identical for any number of threads.

namespace carl::parallel {

inline constexpr std::size_t kChunk = 4096;

inline int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline std::size_t chunk_count(std::size_t n, std::size_t chunk = kChunk) {
  return (n + chunk - 1) / chunk;
}

// Persistent pool: spawning threads per time step would dominate runtimes
// with ~1e5 steps, so workers park on a condition variable between steps.
class Pool {
 public:
  explicit Pool(int threads) : threads_(resolve_threads(threads)) {
    for (int i = 1; i < threads_; ++i)
      workers_.emplace_back([this] { worker_loop(); });
  }

  Pool(const Pool&) = delete;
  Pool& operator=(const Pool&) = delete;

  ~Pool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
      ++generation_;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  int threads() const { return threads_; }

  // fn(chunk_index, begin, end) over [0, n) in chunks of `chunk` items.
  // Chunks are claimed from an atomic cursor; which worker runs a chunk is
  // irrelevant because outputs are keyed by chunk index.
  void for_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                  std::size_t chunk = kChunk) {
    if (n == 0) return;
    n_ = n;
    chunk_size_ = chunk;
    fn_ = &fn;
    cursor_.store(0, std::memory_order_relaxed);
    pending_.store(static_cast<int>(threads_), std::memory_order_relaxed);
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++generation_;
    }
    cv_.notify_all();
    run_chunks();
    // Wait for workers to drain before returning to the caller.
    std::unique_lock<std::mutex> lock(mu_);
    done_cv_.wait(lock, [this] { return pending_.load(std::memory_order_acquire) == 0; });
  }

 private:
  void run_chunks() {
    const std::size_t nchunks = chunk_count(n_, chunk_size_);
    for (;;) {
      const std::size_t c = cursor_.fetch_add(1, std::memory_order_relaxed);
      if (c >= nchunks) break;
      const std::size_t begin = c * chunk_size_;
      const std::size_t end = begin + chunk_size_ < n_ ? begin + chunk_size_ : n_;
      (*fn_)(c, begin, end);
    }
    if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
      std::lock_guard<std::mutex> lock(mu_);
      done_cv_.notify_all();
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [this, seen] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      run_chunks();
    }
  }

  int threads_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::uint64_t generation_ = 0;
  bool stop_ = false;

  std::size_t n_ = 0;
  std::size_t chunk_size_ = kChunk;
  const std::function<void(std::size_t, std::size_t, std::size_t)>* fn_ = nullptr;
  std::atomic<std::size_t> cursor_{0};
  std::atomic<int> pending_{0};
};

}  // namespace carl::parallel
