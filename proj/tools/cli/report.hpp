#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "onexn/pipeline.hpp"

namespace onexn::cli {

struct BenchRow {
  std::string shape;
  std::string pattern;
  std::size_t block_width = 0;
  double rate = 0.0;
  std::string executor;
  unsigned threads = 1;
  double median_ns = 0.0;
  double p10_ns = 0.0;
  double p90_ns = 0.0;
  double speedup_vs_dense = 0.0;
};

/// Reads bench output in either CSV or JSON form.
std::vector<BenchRow> read_bench_rows(const std::filesystem::path& path);

/// Sorts by (shape, pattern, p), then N, executor and threads.
void sort_bench_rows(std::vector<BenchRow>& rows);
std::string bench_rows_csv(const std::vector<BenchRow>& rows);

using MagnitudeHistogram = std::array<std::size_t, kMagnitudeBins>;

struct HistogramPair {
  MagnitudeHistogram without_rearrange{};
  MagnitudeHistogram with_rearrange{};
  std::size_t summaries_without = 0;
  std::size_t summaries_with = 0;
};

HistogramPair collect_histograms(const std::vector<PruneSummary>& summaries);
std::string histogram_csv(const HistogramPair& pair);

std::string latency_svg(const std::vector<BenchRow>& rows);
std::string histogram_svg(const HistogramPair& pair);

/// Classifies each input (bench CSV/JSON or prune summary), then writes
/// bench_merged.csv and latency_vs_p.svg when bench data is present, and
/// retained_magnitude.csv, retained_magnitude.svg and prune_layers.csv when
/// prune summaries are present. Returns the files written.
std::vector<std::filesystem::path> generate_report(
    const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out_dir);

}  // namespace onexn::cli
