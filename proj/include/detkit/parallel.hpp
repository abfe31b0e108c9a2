#pragma once

#include <cstddef>
#include <functional>

namespace detkit {

// Runs fn(i) for i in [0,n). With threads <= 1 the loop is serial; otherwise
// the range is split into contiguous chunks across worker threads. Callers
// write results into index-addressed slots and merge in index order, so the
// output is independent of the thread count.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

// Resolves a --threads request: 0 means auto (hardware concurrency).
int resolve_threads(int requested);

}  // namespace detkit
