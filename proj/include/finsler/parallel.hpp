#pragma once

#include <cstddef>
#include <functional>

namespace finsler {

/// Worker count: FINSLER_THREADS if set and positive, else the hardware
/// concurrency.
unsigned thread_count();

/// Runs body(i) for i in [0, n) over thread_count() workers. Each index is
/// visited exactly once; the first exception thrown by any body is rethrown
/// after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace finsler
