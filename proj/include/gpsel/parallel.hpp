#pragma once

#include <functional>

namespace gpsel {

// Worker count from the GPSEL_WORKERS environment variable, falling back to
// the available hardware parallelism.
int worker_count();

// Runs fn(0..n-1) on a bounded pool and blocks until done. Results must be
// written to per-index slots; the first exception (by index) is rethrown
// after all workers join, so the outcome is independent of scheduling.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace gpsel
