#pragma once

#include <cstddef>
#include <functional>

namespace caplab {

/// Worker count from CAPLAB_THREADS (unset or 0 means hardware concurrency).
std::size_t thread_count();

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = thread_count()).
/// Indices are split into contiguous blocks; callers write per-index results
/// and reduce sequentially afterwards, so output never depends on the worker
/// count. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, std::size_t threads = 0);

}  // namespace caplab
