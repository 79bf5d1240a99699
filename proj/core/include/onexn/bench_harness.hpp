#pragma once

#include <chrono>
#include <cstddef>
#include <span>
#include <vector>

namespace onexn {

struct BenchStats {
  double median_ns = 0.0;
  double p10_ns = 0.0;
  double p90_ns = 0.0;
};

/// Median (mean of the middle pair for even counts) and nearest-rank p10/p90.
BenchStats summarize(std::span<const double> samples_ns);

template <typename T>
inline void do_not_optimize(const T& value) {
#if defined(__GNUC__) || defined(__clang__)
  asm volatile("" : : "g"(&value) : "memory");
#else
  (void)value;
#endif
}

/// Runs `fn` `warmup` times untimed, then `iters` times, returning one
/// steady-clock sample per timed call.
template <typename Fn>
std::vector<double> time_iterations(Fn&& fn, std::size_t warmup, std::size_t iters) {
  using Clock = std::chrono::steady_clock;
  static_assert(Clock::is_steady);
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::vector<double> samples;
  samples.reserve(iters);
  for (std::size_t i = 0; i < iters; ++i) {
    const auto t0 = Clock::now();
    fn();
    const auto t1 = Clock::now();
    samples.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
  }
  return samples;
}

}  // namespace onexn
