#pragma once

#include <cstddef>
#include <functional>

namespace freedeconv {

// Points per scan chunk. Fixed so results do not depend on the thread count.
inline constexpr std::size_t kScanChunk = 64;

/// Worker count: hardware concurrency, capped by FREEDECONV_THREADS when set.
std::size_t thread_count();

/// Runs fn(0..n-1) over a thread pool. The exception of the lowest failing
/// index is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace freedeconv
