#pragma once

#include <cstddef>
#include <functional>

namespace stochwave {

/// Caps the worker count used by parallel_for. 0 selects hardware concurrency.
void set_num_threads(int n);
int num_threads();

/// Runs body(i) for i in [0, n) over contiguous blocks. Each index is handled
/// exactly once; callers write results by index, so output never depends on
/// scheduling. The first exception thrown by a worker is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace stochwave
