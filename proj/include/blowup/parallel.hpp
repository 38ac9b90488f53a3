#pragma once

#include <cstddef>
#include <functional>

namespace blowup {

// BLOWUP_THREADS if set and valid, else hardware concurrency.
int default_threads();

// Process-wide thread count used when a call passes threads <= 0.
void set_threads(int n);
int threads();

// Runs body(i) for i in [0, count). Each index is handled by exactly one
// worker; callers write results into slot i, so output never depends on
// scheduling. The exception of the smallest failing index is rethrown.
void parallel_for(size_t count, const std::function<void(size_t)>& body, int nthreads = 0);

}  // namespace blowup
