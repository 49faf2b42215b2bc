#pragma once

#include <functional>

namespace thinlayer {

/// Worker count: hardware concurrency capped by THINLAYER_THREADS.
int worker_count();

/// Runs body(chunk, begin, end) over [0, n) split into contiguous chunks; returns the chunk count.
/// Chunks are contiguous and merged in order, so results do not depend on the chunk count.
int parallel_chunks(int n, const std::function<void(int chunk, int begin, int end)>& body);

}  // namespace thinlayer
