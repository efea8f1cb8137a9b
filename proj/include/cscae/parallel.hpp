#pragma once

#include <cstdint>
#include <functional>

namespace cscae {

/// Worker budget for tensor kernels, from CSCAE_THREADS (default 1).
int thread_budget();
void set_thread_budget(int n);

/// Runs fn(begin, end) over a partition of [0, n) with at most thread_budget()
/// workers. Chunks must write disjoint outputs; results are then independent
/// of the worker count.
void parallel_chunks(std::int64_t n,
                     const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace cscae
