#pragma once

#include <cstddef>
#include <functional>

namespace mmchss {

/// Resolve a worker count: 0 means hardware concurrency. Always capped by the
/// MMC_HSS_THREADS environment variable when it holds a positive integer.
unsigned worker_count(unsigned requested = 0);

/// Run fn(i) for i in [0, n) on up to `workers` threads. Indices are handed
/// out dynamically; the first exception thrown is rethrown after all workers join.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace mmchss
