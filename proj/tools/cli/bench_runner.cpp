#include "cli/bench_runner.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "onexn/bsr.hpp"
#include "onexn/error.hpp"
#include "onexn/exec.hpp"
#include "onexn/model_io.hpp"

namespace onexn::cli {

namespace {

std::vector<std::size_t> split_dims(const std::string& token) {
  std::vector<std::size_t> dims;
  std::stringstream ss(token);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      fail(ErrorCode::kUsage, "bad shape '" + token + "'");
    }
    dims.push_back(std::stoul(part));
  }
  return dims;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a * 0x9e3779b97f4a7c15ULL + b;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

bool wants(const BenchGrid& grid, const std::string& executor) {
  return std::find(grid.executors.begin(), grid.executors.end(), executor) != grid.executors.end();
}

// Filters of `t` that survived filter pruning, packed into a smaller tensor.
WeightTensor compact_filters(const WeightTensor& t, std::span<const std::uint8_t> keep) {
  std::vector<float> data;
  std::size_t kept = 0;
  for (std::size_t j = 0; j < t.n(); ++j) {
    if (!keep[j]) continue;
    const auto f = t.filter(j);
    data.insert(data.end(), f.begin(), f.end());
    ++kept;
  }
  if (kept == 0) {
    // Keep a single zero filter so the layer remains well-formed.
    data.assign(t.shape().filter_size(), 0.0f);
    kept = 1;
  }
  return WeightTensor({kept, t.m(), t.h(), t.w()}, std::move(data));
}

}  // namespace

BenchShape BenchShape::parse(const std::string& token) {
  const auto dims = split_dims(token);
  BenchShape s;
  s.label = token;
  if (dims.size() == 3) {
    s.rows = dims[0];
    s.in_channels = dims[1];
    s.out_channels = dims[2];
  } else if (dims.size() == 5) {
    s.height = dims[0];
    s.width = dims[1];
    s.in_channels = dims[2];
    s.out_channels = dims[3];
    s.kernel = dims[4];
  } else {
    fail(ErrorCode::kUsage, "shape '" + token + "' must be RxMxC or HxWxMxCxK");
  }
  for (std::size_t d : dims) {
    if (d == 0) fail(ErrorCode::kUsage, "shape '" + token + "' has a zero dimension");
  }
  return s;
}

std::vector<BenchResult> run_bench_grid(const BenchGrid& grid, const BenchProgress& progress) {
  if (grid.iters == 0) fail(ErrorCode::kUsage, "--iters must be >= 1");
  for (double p : grid.rates) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::kUsage, "pruning rates must lie in [0, 1]");
  }
  for (std::size_t n : grid.block_widths) {
    if (n == 0) fail(ErrorCode::kUsage, "block widths must be >= 1");
  }
  for (const auto& e : grid.executors) {
    if (e != "dense" && e != "csr" && e != "bsr" && e != "compact") {
      fail(ErrorCode::kUsage, "unknown executor '" + e + "'");
    }
  }

  const ExecOptions opts{grid.threads};
  std::vector<BenchResult> results;

  for (std::size_t si = 0; si < grid.shapes.size(); ++si) {
    const BenchShape& shape = grid.shapes[si];
    const TensorShape ts{shape.out_channels, shape.in_channels, shape.kernel, shape.kernel};
    std::vector<float> wdata(ts.elements());
    fill_uniform(wdata, mix(grid.seed, 2 * si));
    const WeightTensor weights(ts, std::move(wdata));

    const ActivationShape as{shape.rows, shape.height, shape.width, shape.in_channels};
    std::vector<float> xdata(as.elements());
    fill_uniform(xdata, mix(grid.seed, 2 * si + 1));
    const Activation x(as, std::move(xdata));
    const ConvParams conv{1, shape.kernel / 2};

    auto time_call = [&](auto&& fn) {
      return time_iterations(
          [&] {
            Activation y = fn();
            do_not_optimize(y);
          },
          grid.warmup, grid.iters);
    };

    for (PatternKind pattern : grid.patterns) {
      std::vector<std::size_t> widths{0};
      if (pattern == PatternKind::kBlock1xN) widths = grid.block_widths;
      for (std::size_t bw : widths) {
        if (pattern == PatternKind::kBlock1xN && ts.n % bw != 0) {
          fail(ErrorCode::kUsage, "N = " + std::to_string(bw) + " does not divide " +
                                      std::to_string(ts.n) + " output channels of " + shape.label);
        }
        for (double rate : grid.rates) {
          const PruneResult pruned = prune_tensor(weights, pattern, std::max<std::size_t>(bw, 1), rate);
          const DenseLayer dense(pruned.pruned);
          const auto reference = summarize(time_call([&] { return dense_forward(x, dense, conv, opts); }));

          auto record = [&](const std::string& executor, std::vector<double> samples) {
            BenchResult r;
            r.config = {shape.label, pattern, bw, rate, executor, grid.threads};
            r.stats = summarize(samples);
            r.wall_times_ns = std::move(samples);
            r.speedup_vs_dense = reference.median_ns / r.stats.median_ns;
            if (progress) progress(r);
            results.push_back(std::move(r));
          };

          if (wants(grid, "dense")) {
            record("dense", time_call([&] { return dense_forward(x, dense, conv, opts); }));
          }
          if (wants(grid, "csr")) {
            const CsrLayer csr(pruned.pruned);
            record("csr", time_call([&] { return csr_forward(x, csr, conv, opts); }));
          }
          if (wants(grid, "bsr") && pattern == PatternKind::kBlock1xN) {
            const BsrLayer bsr = bsr_encode(pruned.pruned, *pruned.block_mask);
            record("bsr", time_call([&] { return bsr_forward(x, bsr, conv, opts); }));
          }
          if (wants(grid, "compact") && pattern == PatternKind::kFilter) {
            const DenseLayer compact(compact_filters(pruned.pruned, select_mask_filter(weights, rate)));
            record("compact", time_call([&] { return dense_forward(x, compact, conv, opts); }));
          }
        }
      }
    }
  }
  return results;
}

std::string bench_csv(const std::vector<BenchResult>& rows) {
  std::string out = std::string(kBenchCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += r.config.shape + "," + std::string(to_string(r.config.pattern)) + "," +
           std::to_string(r.config.block_width) + "," + format_double(r.config.rate, "%g") + "," +
           r.config.executor + "," + std::to_string(r.config.threads) + "," +
           format_double(r.stats.median_ns, "%.0f") + "," +
           format_double(r.stats.p10_ns, "%.0f") + "," + format_double(r.stats.p90_ns, "%.0f") +
           "," + format_double(r.speedup_vs_dense, "%.4f") + "\n";
  }
  return out;
}

std::string bench_json(const std::vector<BenchResult>& rows, const BenchGrid& grid) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : rows) {
    list.push_back({{"shape", r.config.shape},
                    {"pattern", std::string(to_string(r.config.pattern))},
                    {"N", r.config.block_width},
                    {"p", r.config.rate},
                    {"executor", r.config.executor},
                    {"threads", r.config.threads},
                    {"wall_times_ns", r.wall_times_ns},
                    {"median_ns", r.stats.median_ns},
                    {"p10_ns", r.stats.p10_ns},
                    {"p90_ns", r.stats.p90_ns},
                    {"speedup_vs_dense", r.speedup_vs_dense}});
  }
  const nlohmann::json doc = {{"kind", "bench"},
                              {"seed", grid.seed},
                              {"warmup", grid.warmup},
                              {"iters", grid.iters},
                              {"rows", std::move(list)}};
  return doc.dump(2) + "\n";
}

}  // namespace onexn::cli
