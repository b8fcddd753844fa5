#include "dials/orchestrator/pool.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "dials/orchestrator/run.hpp"

namespace dials::orchestrator {

void parallel_for(int workers, int n, const std::string& phase, const std::function<void(int)>& task) {
  if (n <= 0) return;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(n));
  auto guarded = [&](int i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const int threads = std::clamp(workers, 1, n);
  if (threads == 1) {
    for (int i = 0; i < n; ++i) guarded(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) guarded(i);
      });
    for (auto& t : pool) t.join();
  }
  for (int i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const RunError&) {
      throw;
    } catch (const std::exception& e) {
      throw RunError(i, phase, e.what());
    } catch (...) {
      throw RunError(i, phase, "unknown error");
    }
  }
}

int resolve_workers(int requested) {
  if (const char* env = std::getenv("DIALS_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return requested;
}

}  // namespace dials::orchestrator
