#pragma once

#include <cstddef>
#include <functional>

namespace rlip {

/// Environment variable that overrides the worker count.
inline constexpr const char* kWorkersEnv = "RLIP_WORKERS";

/// Worker count: RLIP_WORKERS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
[[nodiscard]] int worker_count();

/// Runs body(i) for i in [0, n) across up to `workers` threads. Each index is
/// visited exactly once; callers write results into per-index slots and
/// reduce afterwards in index order, so results do not depend on `workers`.
/// The first exception thrown by any body is rethrown on the caller.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int workers = worker_count());

} // namespace rlip
