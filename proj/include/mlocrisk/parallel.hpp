#pragma once

#include <cstddef>
#include <functional>

namespace mlocrisk {

/// Worker cap: MLOCRISK_THREADS if set to a positive integer, else hardware concurrency.
std::size_t worker_count();

/**
 * Runs body(i) for i in [0, n) on up to worker_count() threads. Each index is
 * processed exactly once; the first exception thrown by any body is rethrown
 * after all workers join.
 */
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace mlocrisk
