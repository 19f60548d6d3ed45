#pragma once

#include <cstddef>
#include <functional>

namespace loggap {

// Worker count used by the parallel kernels. Defaults to LOGGAP_THREADS when
// set, else 1.
int thread_count();
void set_thread_count(int threads);

// Splits [0, count) into fixed chunks of `grain` items and runs
// body(chunk_index, begin, end) on each. The partition depends only on
// (count, grain), so per-chunk partial results reduced in chunk order are
// identical for any thread count.
void parallel_chunks(std::size_t count, std::size_t grain,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& body);

inline std::size_t chunk_count(std::size_t count, std::size_t grain) {
  return grain == 0 ? 0 : (count + grain - 1) / grain;
}

}  // namespace loggap
