#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "onexn/bench_harness.hpp"
#include "onexn/pattern.hpp"

namespace onexn::cli {

/// Layer geometry for a benchmark. Three dims "RxMxC" describe a GEMM with R
/// activation rows, M input and C output channels; five dims "HxWxMxCxK"
/// describe a stride-1 KxK convolution over an HxW input padded by K/2.
struct BenchShape {
  std::string label;
  std::size_t rows = 1;  // GEMM rows, or 1 for conv
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;

  bool is_conv() const { return kernel > 1 || height > 1 || width > 1; }
  static BenchShape parse(const std::string& token);
};

struct BenchConfig {
  std::string shape;
  PatternKind pattern = PatternKind::kBlock1xN;
  std::size_t block_width = 0;  // 0 when the pattern has no block width
  double rate = 0.0;
  std::string executor;
  unsigned threads = 1;
};

struct BenchResult {
  BenchConfig config;
  std::vector<double> wall_times_ns;
  BenchStats stats;
  double speedup_vs_dense = 0.0;
};

/// Executors: dense, csr, bsr (1xn only) and compact (filter only: a dense
/// layer holding just the surviving filters).
struct BenchGrid {
  std::vector<BenchShape> shapes;
  std::vector<PatternKind> patterns;
  std::vector<std::size_t> block_widths;
  std::vector<double> rates;
  std::vector<std::string> executors{"dense", "csr", "bsr", "compact"};
  std::size_t warmup = 1;
  std::size_t iters = 5;
  unsigned threads = 1;
  std::uint64_t seed = 1;
};

using BenchProgress = std::function<void(const BenchResult&)>;

/// For every configuration, times a dense reference first, then each
/// applicable executor on the same weights and input.
std::vector<BenchResult> run_bench_grid(const BenchGrid& grid, const BenchProgress& progress = {});

inline constexpr const char* kBenchCsvHeader =
    "shape,pattern,N,p,executor,threads,median_ns,p10_ns,p90_ns,speedup_vs_dense";

std::string bench_csv(const std::vector<BenchResult>& rows);
std::string bench_json(const std::vector<BenchResult>& rows, const BenchGrid& grid);

}  // namespace onexn::cli
