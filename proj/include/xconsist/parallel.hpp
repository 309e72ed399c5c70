#pragma once

#include <cstddef>
#include <functional>

namespace xconsist {

// Worker count: XCONSIST_THREADS when set to a positive integer, else the
// hardware concurrency (at least 1).
unsigned worker_count();

// Splits [0, n) into contiguous chunks, one per worker, and runs
// fn(chunk_index, begin, end) concurrently. Chunk boundaries depend only on n
// and the worker count; callers reduce per-chunk results in chunk order.
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn,
                     unsigned workers = 0);

}  // namespace xconsist
