#pragma once

#include <functional>

namespace rsi {

// Process-wide worker count for row-parallel loops (1 = sequential).
// The CLI sets this from --threads; libraries only read it.
int parallel_threads();
void set_parallel_threads(int n);

// Runs fn(i) for i in [0, count) split across parallel_threads() workers.
// fn must be safe to run concurrently for distinct i.
void parallel_for(int count, const std::function<void(int)>& fn);

} // namespace rsi
