#pragma once

#include <cstddef>
#include <functional>

namespace cardioflow {

/// Number of worker threads; read once from CARDIOFLOW_THREADS (default 1).
int thread_count();

/// Overrides the thread count for the rest of the process (tests).
void set_thread_count(int n);

/// Splits [0, n) into fixed-size chunks and calls fn(chunk_index, begin, end)
/// for each, possibly concurrently. Chunk boundaries depend only on n and
/// chunk_size, so callers that reduce per-chunk results in chunk order get
/// bitwise-identical output for any thread count.
void for_each_chunk(std::size_t n, std::size_t chunk_size,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

inline std::size_t chunk_count(std::size_t n, std::size_t chunk_size) {
  return (n + chunk_size - 1) / chunk_size;
}

} // namespace cardioflow
