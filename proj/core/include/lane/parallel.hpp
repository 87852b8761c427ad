#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace lane {

namespace detail {
inline std::atomic<unsigned> jobs_override{0};
}

/// Worker count used by the kernels: the value given to set_default_jobs,
/// else the hardware concurrency.
inline unsigned default_jobs() {
  if (unsigned j = detail::jobs_override.load()) return j;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// 0 restores the hardware default.
inline void set_default_jobs(unsigned jobs) { detail::jobs_override = jobs; }

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Work items must be
/// independent; results never depend on the split.
template <typename Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (unsigned t = 0; t < jobs; ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& w : workers) w.join();
}

}  // namespace lane
