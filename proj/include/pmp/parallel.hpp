#pragma once

#include <cstddef>
#include <functional>

namespace pmp {

/// Worker count: hardware concurrency, capped by PARETO_MRMP_THREADS when set.
int worker_count();

/// Splits [0, n) into contiguous chunks, one per worker, and runs body(begin, end, chunk)
/// on each. Chunk boundaries depend only on n and the worker count.
void parallel_chunks(std::size_t n, int workers,
                     const std::function<void(std::size_t, std::size_t, int)>& body);

}  // namespace pmp
