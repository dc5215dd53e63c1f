#pragma once

#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <vector>

namespace perchomog {

// Runs fn(i) for i in [0, n) on up to `workers` threads and returns the
// results ordered by i. The schedule never influences the output: each index
// computes independently, results land in a preallocated slot, and the reduce
// order is the index order. With workers <= 1 everything runs inline.
//
// Exceptions are captured per index and rethrown (the smallest failing index
// wins) after all workers drain, so partial work never leaks.
template <typename T>
std::vector<T> parallel_map(int64_t n, int workers, const std::function<T(int64_t)>& fn);

// Non-templated core used by the instantiations below; runs tasks by index.
void parallel_for_index(int64_t n, int workers, const std::function<void(int64_t)>& task);

template <typename T>
std::vector<T> parallel_map(int64_t n, int workers, const std::function<T(int64_t)>& fn) {
  std::vector<T> out(static_cast<size_t>(n > 0 ? n : 0));
  parallel_for_index(n, workers, [&](int64_t i) { out[static_cast<size_t>(i)] = fn(i); });
  return out;
}

// Worker-count clamp shared by the CLI and the sweep harnesses.
int effective_workers(int requested, int64_t n_tasks);

}  // namespace perchomog
