#pragma once

#include <cstddef>
#include <functional>

namespace seqlpd {

// Worker count: SEQLPD_THREADS if set to a positive integer, otherwise the
// hardware concurrency. Read on every call so tests can change it.
std::size_t thread_count();

// Runs body(begin, end) over contiguous chunks of [0, n). Chunks write
// disjoint outputs; any cross-chunk reduction is the caller's job and must be
// done afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 16);

}  // namespace seqlpd
