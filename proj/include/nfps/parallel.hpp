// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nfps {

inline int hardware_threads() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

/// Persistent worker pool behind parallel_for. Work is handed out as
/// contiguous index chunks; which thread runs a chunk never affects results
/// because every chunk writes only to locations derived from its indices.
class ThreadPool {
  public:
    static ThreadPool& instance() {
        static ThreadPool pool;
        return pool;
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    void run(int num_chunks, const std::function<void(int)>& chunk_fn) {
        if (num_chunks <= 1) {
            if (num_chunks == 1) chunk_fn(0);
            return;
        }
        ensure_workers(num_chunks - 1);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            job_ = &chunk_fn;
            total_chunks_ = num_chunks;
            next_chunk_.store(0, std::memory_order_relaxed);
            pending_ = num_chunks;
            ++generation_;
        }
        cv_.notify_all();
        drain();
        std::unique_lock<std::mutex> lock(mutex_);
        done_cv_.wait(lock, [&] { return pending_ == 0; });
        job_ = nullptr;
    }

  private:
    ThreadPool() = default;
    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    void ensure_workers(int n) {
        std::lock_guard<std::mutex> lock(spawn_mutex_);
        while (static_cast<int>(workers_.size()) < n)
            workers_.emplace_back([this] { worker_loop(); });
    }

    void drain() {
        int chunk;
        while ((chunk = next_chunk_.fetch_add(1, std::memory_order_relaxed)) <
               total_chunks_) {
            (*job_)(chunk);
            finish_one();
        }
    }

    void finish_one() {
        std::lock_guard<std::mutex> lock(mutex_);
        if (--pending_ == 0) done_cv_.notify_all();
    }

    void worker_loop() {
        std::uint64_t seen = 0;
        for (;;) {
            {
                std::unique_lock<std::mutex> lock(mutex_);
                cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
            }
            drain();
        }
    }

    std::mutex mutex_;
    std::mutex spawn_mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> workers_;
    const std::function<void(int)>* job_ = nullptr;
    std::atomic<int> next_chunk_{0};
    int total_chunks_ = 0;
    int pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

/// Runs body(i) for i in [begin, end), split into contiguous chunks across
/// `threads` threads. threads <= 1 runs inline. Output is identical for any
/// thread count as long as body(i) writes only to i-dependent locations.
template <class F>
void parallel_for(int begin, int end, int threads, F&& body) {
    const int n = end - begin;
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (int i = begin; i < end; ++i) body(i);
        return;
    }
    const int chunks = std::min(threads, n);
    const int step = (n + chunks - 1) / chunks;
    ThreadPool::instance().run(chunks, [&](int c) {
        const int lo = begin + c * step;
        const int hi = std::min(end, lo + step);
        for (int i = lo; i < hi; ++i) body(i);
    });
}

}  // namespace nfps
