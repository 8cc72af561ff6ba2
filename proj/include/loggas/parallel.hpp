#pragma once

#include <cstddef>
#include <functional>

namespace loggas {

/// Worker count resolved from an explicit request, falling back to LOGGAS_WORKERS, then 1.
int resolve_workers(int requested);

/// Runs task(b) for b in [0, count) on `workers` threads. Block b always goes to worker
/// b % workers; callers store per-block results and reduce them in block order, so the
/// outcome does not depend on scheduling.
void parallel_blocks(int workers, std::size_t count, const std::function<void(std::size_t)>& task);

}  // namespace loggas
