#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mfg {

/// Sets the number of worker threads used by parallel_for. Zero selects
/// std::thread::hardware_concurrency().
void set_worker_count(unsigned n);
unsigned worker_count();

/// Runs fn(i) for i in [0, n). Work is split into contiguous blocks, so a
/// body that writes only to slot i gives results independent of the
/// thread count. The first exception thrown by any body is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace mfg
