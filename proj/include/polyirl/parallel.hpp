#pragma once

#include <cstddef>
#include <functional>

namespace polyirl {

// Number of worker threads; POLYIRL_THREADS overrides hardware_concurrency.
std::size_t worker_count();

// Runs body(i) for i in [0, n). Each index is handled by exactly one worker,
// so results written to per-index slots are independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace polyirl
