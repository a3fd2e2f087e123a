#pragma once

#include <cstddef>
#include <functional>

namespace puq {

// Worker count for read-only evaluation work. Honors PUQ_THREADS, otherwise
// the hardware concurrency (at least 1).
std::size_t evaluation_threads();

// Splits [0, n) into contiguous chunks and runs fn(begin, end) on up to
// evaluation_threads() threads. fn must only touch per-index state.
void parallel_for_chunks(std::size_t n,
                         const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace puq
