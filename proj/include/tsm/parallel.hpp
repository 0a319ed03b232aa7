#pragma once

#include <cstddef>
#include <functional>

namespace tsm {

// Process-wide cap on worker threads used by library kernels. A value of 0
// means "use TSM_THREADS from the environment, else 1".
void set_num_threads(std::size_t n);
std::size_t num_threads();

// Runs fn(i) for every i in [begin, end). Indices are split into contiguous
// static chunks, one per worker. fn must only write state owned by index i,
// so results never depend on the thread count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn);

}  // namespace tsm
