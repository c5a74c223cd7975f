// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#include "atreg/compute_pool.hpp"

#include <algorithm>
#include <atomic>
#include <exception>

namespace atreg {

struct ComputePool::Batch {
  const std::function<void(std::size_t)>* fn = nullptr;
  std::size_t count = 0;
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;  // guarded by mu
  std::mutex mu;
  std::condition_variable finished;
  std::exception_ptr error;
  std::size_t visitors = 0;  // workers holding a pointer; guarded by the pool mutex

  // Claims and runs items until none are left. Returns the number executed.
  std::size_t drain() {
    std::size_t ran = 0;
    for (;;) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) {
        break;
      }
      try {
        (*fn)(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) {
          error = std::current_exception();
        }
      }
      ++ran;
    }
    if (ran > 0) {
      std::lock_guard lock(mu);
      done += ran;
      if (done == count) {
        finished.notify_all();
      }
    }
    return ran;
  }
};

ComputePool::ComputePool(std::size_t threads) {
  if (threads == 0) {
    threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  for (std::size_t i = 1; i < threads; ++i) {
    workers_.emplace_back([this] { worker_loop(); });
  }
}

ComputePool::~ComputePool() {
  {
    std::lock_guard lock(mu_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& t : workers_) {
    t.join();
  }
}

void ComputePool::worker_loop() {
  for (;;) {
    Batch* batch = nullptr;
    {
      std::unique_lock lock(mu_);
      wake_.wait(lock, [&] { return stop_ || !queue_.empty(); });
      if (stop_ && queue_.empty()) {
        return;
      }
      batch = queue_.front();
      if (batch->next.load(std::memory_order_relaxed) >= batch->count) {
        queue_.erase(queue_.begin());
        continue;
      }
      ++batch->visitors;
    }
    batch->drain();
    {
      std::lock_guard lock(mu_);
      --batch->visitors;
    }
    released_.notify_all();
  }
}

void ComputePool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  if (n == 0) {
    return;
  }
  Batch batch;
  batch.fn = &fn;
  batch.count = n;
  if (!workers_.empty() && n > 1) {
    {
      std::lock_guard lock(mu_);
      queue_.push_back(&batch);
    }
    wake_.notify_all();
  }
  batch.drain();
  {
    std::unique_lock lock(batch.mu);
    batch.finished.wait(lock, [&] { return batch.done == batch.count; });
  }
  {
    std::unique_lock lock(mu_);
    std::erase(queue_, &batch);
    released_.wait(lock, [&] { return batch.visitors == 0; });
  }
  if (batch.error) {
    std::rethrow_exception(batch.error);
  }
}

}  // namespace atreg
