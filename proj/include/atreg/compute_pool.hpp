// Copyright 2026 The atreg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace atreg {

/// Fixed-size worker pool with a blocking parallel_for. The calling thread
/// also executes items, so nested or single-threaded use cannot deadlock.
class ComputePool {
 public:
  /// `threads` = total parallelism including the caller; 0 picks
  /// std::thread::hardware_concurrency().
  explicit ComputePool(std::size_t threads = 0);
  ~ComputePool();

  ComputePool(const ComputePool&) = delete;
  ComputePool& operator=(const ComputePool&) = delete;

  std::size_t parallelism() const { return workers_.size() + 1; }

  /// Runs fn(i) for i in [0, n). The first exception thrown by any item is
  /// rethrown after all items finish.
  void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

 private:
  struct Batch;
  void worker_loop();

  std::mutex mu_;
  std::condition_variable wake_;
  std::condition_variable released_;
  std::vector<Batch*> queue_;
  bool stop_ = false;
  std::vector<std::thread> workers_;
};

}  // namespace atreg
