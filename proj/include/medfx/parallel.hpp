#pragma once

#include <cstddef>
#include <functional>

namespace medfx {

/// Worker count: explicit request if nonzero, else MEDFX_THREADS, else hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Runs body(i) for i in [0, count) on up to `threads` workers. Results must be written
/// to per-index slots so the outcome never depends on scheduling. The first exception
/// thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace medfx
