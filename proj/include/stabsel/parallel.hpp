#pragma once

#include <cstddef>
#include <functional>

namespace stabsel {

/// Worker count: explicit request if nonzero, else STABSEL_THREADS, else the
/// hardware concurrency (at least 1).
std::size_t resolve_threads(std::size_t requested);

/// Calls body(i) for i in [0, count) on up to `threads` workers. Work items
/// are claimed dynamically; callers must write results by index. The first
/// exception thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace stabsel
