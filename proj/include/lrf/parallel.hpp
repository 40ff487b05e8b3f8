#pragma once

#include <cstddef>
#include <functional>

namespace lrf {

/// Runs `body(i)` for every i in [0, count) on up to `jobs` threads.
/// Iterations must write only to their own output slots; the first
/// exception thrown by any iteration is rethrown on the caller.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace lrf
