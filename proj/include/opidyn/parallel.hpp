#pragma once
#include <cstddef>
#include <functional>
#include <optional>

namespace opidyn {

// Thread count resolution order: explicit argument, OPIDYN_THREADS env var,
// hardware concurrency.
int default_thread_count();

// Runs fn(i) for i in [0, n) on a static block partition. Blocks until done.
// The first exception thrown by any worker is rethrown on the caller.
// Workers must write to disjoint slots; no other synchronization is provided.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::optional<int> threads = {});

}  // namespace opidyn
