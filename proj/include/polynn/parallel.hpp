#pragma once

#include <cstddef>
#include <functional>

namespace polynn {

// Worker count used by parallel_for. 0 means hardware concurrency.
void set_thread_count(std::size_t n);
[[nodiscard]] std::size_t thread_count();

// Runs body(i) for i in [0, n). Each index is visited exactly once; callers
// write results by index so output layout never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace polynn
