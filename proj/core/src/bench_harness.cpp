#include "onexn/bench_harness.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "onexn/error.hpp"

namespace onexn {

namespace {

// Nearest-rank percentile on sorted data.
double nearest_rank(const std::vector<double>& sorted, double pct) {
  const auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * sorted.size()));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

}  // namespace

BenchStats summarize(std::span<const double> samples_ns) {
  if (samples_ns.empty()) fail(ErrorCode::kPrecondition, "no timing samples");
  std::vector<double> sorted(samples_ns.begin(), samples_ns.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  BenchStats stats;
  stats.median_ns = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  stats.p10_ns = nearest_rank(sorted, 10.0);
  stats.p90_ns = nearest_rank(sorted, 90.0);
  return stats;
}

}  // namespace onexn
