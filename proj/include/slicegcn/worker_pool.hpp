#pragma once

#include <atomic>
#include <barrier>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace slicegcn {

/// Fixed set of threads that execute one batch of independent tasks at a
/// time, bracketed by a start and a done barrier. Thread t runs tasks
/// t, t + threads, t + 2 * threads, ... so the task-to-thread assignment is
/// static. With zero threads every task runs inline on the caller, in index
/// order; that mode is the sequential reference.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t threads)
      : start_(static_cast<std::ptrdiff_t>(threads + 1)),
        done_(static_cast<std::ptrdiff_t>(threads + 1)) {
    threads_.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) threads_.emplace_back([this, t] { loop(t); });
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  ~WorkerPool() {
    stop_.store(true);
    if (!threads_.empty()) start_.arrive_and_wait();
    for (auto& t : threads_) t.join();
  }

  std::size_t threads() const { return threads_.size(); }

  /// Runs fn(0) .. fn(tasks - 1) and returns once all have finished. The
  /// first exception by task index is rethrown. Not reentrant.
  void run(std::size_t tasks, const std::function<void(std::size_t)>& fn) {
    errors_.assign(tasks, nullptr);
    if (threads_.empty()) {
      for (std::size_t i = 0; i < tasks; ++i) invoke(fn, i);
    } else {
      tasks_ = tasks;
      fn_ = &fn;
      start_.arrive_and_wait();
      done_.arrive_and_wait();
      fn_ = nullptr;
    }
    for (auto& e : errors_)
      if (e) std::rethrow_exception(e);
  }

 private:
  void invoke(const std::function<void(std::size_t)>& fn, std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      errors_[i] = std::current_exception();
    }
  }

  void loop(std::size_t t) {
    while (true) {
      start_.arrive_and_wait();
      if (stop_.load()) return;
      for (std::size_t i = t; i < tasks_; i += threads_.size()) invoke(*fn_, i);
      done_.arrive_and_wait();
    }
  }

  std::vector<std::thread> threads_;
  std::barrier<> start_, done_;
  std::atomic<bool> stop_{false};
  std::size_t tasks_ = 0;
  const std::function<void(std::size_t)>* fn_ = nullptr;
  std::vector<std::exception_ptr> errors_;
};

}  // namespace slicegcn
