#pragma once

#include <cstddef>
#include <functional>

namespace lemsim {

/// Worker count: hardware concurrency, capped by LEMSIM_THREADS when set.
unsigned worker_count();

/// Runs body(i) for i in [0, n). Each index runs exactly once; the first
/// exception thrown (lowest index) is rethrown after all workers finish.
/// Calls made from inside a worker run serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace lemsim
