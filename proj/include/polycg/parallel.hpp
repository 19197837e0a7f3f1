// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>

namespace polycg
{

// Number of worker threads used by the sparse kernels. Defaults to the
// POLYCG_NUM_THREADS environment variable, else the OpenMP default.
int num_threads();

// n <= 0 restores the default.
void set_num_threads(int n);

// Loops shorter than this run on the calling thread.
inline constexpr std::size_t kParallelThreshold = 4096;

template <typename F>
void parallel_for(std::size_t n, F &&body)
{
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for num_threads(num_threads()) schedule(static) if (n >= kParallelThreshold)
  for (std::int64_t i = 0; i < count; ++i)
  {
    body(static_cast<std::size_t>(i));
  }
}

// Same as parallel_for but always forks; meant for loops over a handful of
// heavy work items (strips, matrix blocks).
template <typename F>
void parallel_for_tasks(std::size_t n, F &&body)
{
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for num_threads(num_threads()) schedule(dynamic, 1) if (n > 1)
  for (std::int64_t i = 0; i < count; ++i)
  {
    body(static_cast<std::size_t>(i));
  }
}

}  // namespace polycg
