#pragma once

#include <functional>
#include <string>

namespace dials::orchestrator {

/// Runs task(0..n-1) on up to `workers` threads and returns once all are done,
/// so every call is a barrier. Tasks must not share mutable state. A failing
/// task is rethrown as RunError naming the lowest failing index and `phase`.
void parallel_for(int workers, int n, const std::string& phase, const std::function<void(int)>& task);

/// DIALS_WORKERS when set to a positive integer, else `requested`.
int resolve_workers(int requested);

}  // namespace dials::orchestrator
