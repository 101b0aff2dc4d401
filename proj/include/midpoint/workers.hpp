#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace midpoint {

/// Fixed-size fork/join executor.  `parallel_for(n, body)` splits [0, n)
/// into at most `size()` contiguous shards and calls body(begin, end) on
/// each; the call returns when every shard has finished.  Work is keyed by
/// index, never by shard, so results do not depend on the worker count.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers = 1) : workers_(workers == 0 ? 1 : workers) {}

  std::size_t size() const noexcept { return workers_; }

  template <typename Body>
  void parallel_for(std::size_t n, Body&& body) const {
    const std::size_t shards = std::min(workers_, n);
    if (shards <= 1) {
      if (n > 0) body(std::size_t{0}, n);
      return;
    }
    std::vector<std::exception_ptr> errors(shards);
    {
      std::vector<std::jthread> threads;
      threads.reserve(shards - 1);
      for (std::size_t s = 1; s < shards; ++s) {
        threads.emplace_back([&, s] {
          try {
            body(shard_begin(s, shards, n), shard_begin(s + 1, shards, n));
          } catch (...) {
            errors[s] = std::current_exception();
          }
        });
      }
      try {
        body(std::size_t{0}, shard_begin(1, shards, n));
      } catch (...) {
        errors[0] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  /// Worker count from MIDPOINT_SAMPLER_THREADS, or `fallback` when unset
  /// or unparsable.
  static std::size_t from_env(std::size_t fallback = 1);

  static const WorkerPool& serial();

 private:
  static std::size_t shard_begin(std::size_t s, std::size_t shards, std::size_t n) noexcept {
    return n * s / shards;
  }

  std::size_t workers_;
};

}  // namespace midpoint
