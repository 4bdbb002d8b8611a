#pragma once

#include <cstddef>
#include <functional>

namespace driftlab {

// Worker cap: DRIFTLAB_THREADS when set (minimum 1), otherwise
// hardware_concurrency.
int max_threads();

// Runs body(i) for i in [0, n).  Work items must be independent and write
// only to their own slot; given that, results do not depend on the thread
// count, so runs are reproducible under any DRIFTLAB_THREADS.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace driftlab
