#pragma once

#include <cstddef>
#include <functional>

namespace kpzlab {

// Worker count for replica fan-out. Defaults to LAB_THREADS if set, else hardware concurrency.
unsigned worker_threads();
void set_worker_threads(unsigned n);

// Runs body(i) for i in [0, count) on the worker pool. Results must be written to slot i by the
// caller so that reductions happen afterwards in index order. The exception of the lowest failing
// index is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace kpzlab
