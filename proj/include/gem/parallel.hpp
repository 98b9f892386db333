#pragma once

#include <cstddef>
#include <functional>

namespace gem {

/// Worker count used by parallel_for. 0 selects the hardware concurrency.
void set_num_threads(std::size_t n);
std::size_t num_threads();

/// Runs body(i) for i in [0, count) on up to num_threads() workers.
/// Work items must write to disjoint outputs; results never depend on the
/// worker count. If several items throw, the exception of the lowest index
/// is rethrown. Calls made from inside a worker run serially.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace gem
