#pragma once

#include <cstddef>
#include <functional>

namespace popcode {

// Number of worker threads used by parallel_for; defaults to the hardware
// concurrency and can be pinned with POPCODE_THREADS.
std::size_t worker_count();

// Runs body(begin, end) over a static partition of [0, n). Partition
// boundaries depend only on n and the worker count, never on timing, and
// callers are expected to write into disjoint slots so that results are
// reproducible. Exceptions thrown by any chunk are rethrown (first one wins).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace popcode
