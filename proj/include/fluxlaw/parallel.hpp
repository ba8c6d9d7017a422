#pragma once

#include <cstddef>
#include <functional>

namespace fluxlaw {

/// Worker count for parallel_for. Defaults to $FLUXLAW_THREADS, else 1.
int thread_count();
void set_thread_count(int n);

/// Calls fn(i) for i in [0, n) using static contiguous chunks. Callers write
/// results into per-index slots and reduce afterwards in index order, so
/// results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace fluxlaw
