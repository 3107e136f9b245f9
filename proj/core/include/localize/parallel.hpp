#pragma once

#include <cstddef>
#include <functional>

namespace localize {

// Number of worker threads to use when the caller asked for "default".
// Resolution order: explicit request > LOCALIZE_THREADS > hardware cores.
int resolve_threads(int requested);

// Runs fn(i) for every i in [0, count). Indices are claimed from a shared
// atomic counter, so callers must key any output by i; reductions over the
// results then do not depend on scheduling or on the thread count.
// The first exception thrown by any worker is rethrown on the caller.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace localize
