#pragma once

#include <cstddef>
#include <functional>

namespace fcm {

/// Worker cap: FCMLAB_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t thread_count();

/// Calls fn(k) for k in [0, count) on up to thread_count() threads. Callers
/// write into preallocated slots and reduce afterwards in index order, so
/// results do not depend on the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace fcm
