#pragma once

#include <cstddef>
#include <functional>

namespace dicode {

/// Worker count from an explicit value, falling back to DICODE_WORKERS, then 1.
int resolve_workers(int requested);

/// Runs fn(i) for i in [0, n) across `workers` threads with a static
/// partition. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace dicode
