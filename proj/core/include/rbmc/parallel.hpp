#pragma once

#include <cstddef>
#include <functional>

namespace rbmc {

// Worker-thread count for the embarrassingly parallel loops (per-cell
// assembly, MC ownership). 1 by default; results are independent of the
// setting because every task writes only its own slot.
int worker_threads();
void set_worker_threads(int n);  // 0 picks the hardware count

// Runs fn(begin, end) over a fixed contiguous split of [0, n).
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace rbmc
