#pragma once

#include <cstddef>
#include <functional>

namespace surfconv {

// Worker count from SURFCONV_THREADS, else hardware concurrency (min 1).
int DefaultThreadCount();

// Splits [0, count) into contiguous chunks, one per worker, and runs
// fn(begin, end) on each. Chunk boundaries depend only on count and threads.
void ParallelFor(std::size_t count, int threads,
                 const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace surfconv
