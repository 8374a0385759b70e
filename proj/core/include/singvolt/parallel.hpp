#pragma once

#include <cstddef>
#include <functional>

namespace singvolt {

/// Worker count: SINGVOLT_THREADS if set and positive, else hardware concurrency.
std::size_t thread_count();

/// Runs fn(i) for i in [begin, end) on up to thread_count() threads.
/// Indices are handed out dynamically. The first exception thrown is rethrown.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& fn);

}  // namespace singvolt
