#pragma once

#include <cstddef>
#include <functional>

namespace lfboot {

/// Worker count: LFBOOT_THREADS if set and positive, otherwise hardware concurrency.
std::size_t default_thread_count();

/// Runs body(i) for i in [0, count) across `threads` workers. Each index is
/// processed exactly once; callers write results into per-index slots so the
/// outcome does not depend on scheduling. The first exception thrown by a
/// worker is rethrown after all workers join.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t threads = 0);

}  // namespace lfboot
