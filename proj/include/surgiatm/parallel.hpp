#pragma once

#include <cstddef>
#include <functional>

namespace surgiatm {

/// Worker count from SURGIATM_WORKERS, falling back to 1.
int default_workers();

/// Splits [0, count) into contiguous chunks, one per worker, and runs
/// `body(begin, end)` on each. Chunks write disjoint outputs, so results do
/// not depend on the worker count. Exceptions from workers are rethrown.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace surgiatm
