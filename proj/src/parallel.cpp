// SPDX-License-Identifier: Apache-2.0

#include "polycg/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include <omp.h>

namespace polycg
{

namespace
{

int default_threads()
{
  if (const char *env = std::getenv("POLYCG_NUM_THREADS"))
  {
    try
    {
      const int n = std::stoi(env);
      if (n > 0)
      {
        return n;
      }
    }
    catch (const std::exception &)
    {
    }
  }
  return omp_get_max_threads();
}

std::atomic<int> &thread_setting()
{
  static std::atomic<int> threads{default_threads()};
  return threads;
}

}  // namespace

int num_threads() { return thread_setting().load(std::memory_order_relaxed); }

void set_num_threads(int n)
{
  thread_setting().store(n > 0 ? n : default_threads(), std::memory_order_relaxed);
}

}  // namespace polycg
