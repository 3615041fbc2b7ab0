#pragma once

#include <cstddef>
#include <functional>

namespace hinf {

// Number of worker threads for a request of n (0 = all cores).
std::size_t resolve_threads(std::size_t n);

// Runs fn(i) for i in [0, count) on up to `threads` threads, in contiguous
// chunks. The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

} // namespace hinf
