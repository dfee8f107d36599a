#pragma once

#include <cstdint>
#include <functional>

namespace g4d {

// Worker-thread budget: min(hardware threads, G4D_THREADS). Always >= 1.
int thread_budget();

// Runs fn over [0, count) split into contiguous chunks, one chunk per worker.
// Chunks must be independent; the call blocks until all chunks finish.
void parallel_for(std::int64_t count, const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace g4d
