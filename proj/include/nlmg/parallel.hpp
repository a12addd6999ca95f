#pragma once

#include <cstddef>
#include <functional>

namespace nlmg {

/// Worker count: hardware concurrency, capped by the NLMG_THREADS environment variable.
int worker_count();

/// Runs body(begin, end) over contiguous chunks of [0, count). Chunks are fixed by
/// `count` and the worker count only, so results written per index are deterministic.
/// The first exception thrown by any chunk is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace nlmg
