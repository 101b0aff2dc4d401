#include "midpoint/workers.hpp"

#include <cstdlib>
#include <string>

namespace midpoint {

std::size_t WorkerPool::from_env(std::size_t fallback) {
  const char* raw = std::getenv("MIDPOINT_SAMPLER_THREADS");
  if (raw == nullptr || *raw == '\0') return fallback;
  try {
    const long v = std::stol(raw);
    return v > 0 ? static_cast<std::size_t>(v) : fallback;
  } catch (...) {
    return fallback;
  }
}

const WorkerPool& WorkerPool::serial() {
  static const WorkerPool pool(1);
  return pool;
}

}  // namespace midpoint
