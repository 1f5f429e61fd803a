#pragma once

#include <cstddef>
#include <functional>

namespace corgs {

/// Worker count used by the rasterizer and metrics. Defaults to 1.
void set_num_threads(int n);
int num_threads();

/// Runs fn(task) for task in [0, n_tasks) on up to num_threads() workers.
/// Tasks are claimed dynamically; callers must make results independent of
/// which worker ran a task.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& fn);

}  // namespace corgs
