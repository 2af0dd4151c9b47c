#pragma once

#include <functional>

namespace modseg {

// Worker cap from MODSEG_THREADS; defaults to 1 so runs stay reproducible
// unless the user opts in.
int thread_cap();

// Runs fn(0..n-1) on up to thread_cap() workers. Items must be independent;
// exceptions from workers are rethrown on the caller.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace modseg
