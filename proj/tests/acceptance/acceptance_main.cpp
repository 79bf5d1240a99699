// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if
// any fails. Optional arguments select criteria by number, e.g. `1 8`.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "cli/bench_runner.hpp"
#include "onexn/bsr.hpp"
#include "onexn/exec.hpp"
#include "onexn/model_io.hpp"
#include "onexn/pattern.hpp"
#include "onexn/rearrange.hpp"
#include "oracles.hpp"

namespace {

using namespace onexn;
using testing::random_activation;
using testing::random_tensor;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

template <typename T>
const T& pick_from(std::mt19937_64& rng, const std::vector<T>& options) {
  return options[pick(rng, 0, options.size() - 1)];
}

std::set<std::size_t> kept(std::span<const std::uint8_t> bits) {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out.insert(i);
  }
  return out;
}

// bsr_forward on the encoded pruned layer against dense_forward on the pruned
// dense weights.
Outcome oracle_equivalence() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  const std::vector<std::size_t> widths{2, 4, 8, 16, 32};
  const std::vector<double> rates{0.25, 0.5, 0.75, 0.9375};
  constexpr int kConfigs = 200;
  double worst = 0.0;
  double worst_elementwise = 0.0;
  int failures = 0;
  for (int i = 0; i < kConfigs; ++i) {
    const std::size_t width = pick_from(rng, widths);
    const std::size_t n = width * pick(rng, std::max<std::size_t>(1, 8 / width), 128 / width);
    const std::size_t m = pick(rng, 8, 128);
    const std::size_t k = i % 2 ? 3 : 1;
    const double p = pick_from(rng, rates);
    const WeightTensor w = random_tensor({n, m, k, k}, rng);
    const PruneResult r = prune_tensor(w, PatternKind::kBlock1xN, width, p);
    const BsrLayer layer = bsr_encode(r.pruned, *r.block_mask);
    const ConvParams conv{1, k / 2};
    const Activation x = k == 1 ? random_activation({pick(rng, 16, 64), 1, 1, m}, rng)
                                : random_activation({1, pick(rng, 6, 10), pick(rng, 6, 10), m}, rng);
    const Activation ref = dense_forward(x, r.pruned, conv);
    const Activation got = bsr_forward(x, layer, conv);
    const double err = max_relative_error(got.data(), ref.data());
    worst = std::max(worst, err);
    worst_elementwise =
        std::max(worst_elementwise, max_elementwise_relative_error(got.data(), ref.data()));
    if (err > 1e-5) ++failures;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {failures == 0 && secs < 300.0,
          format("%d configs, max rel err %.3g (elementwise %.3g), tol 1e-5, %.1f s of 300 s budget",
                 kConfigs, worst, worst_elementwise, secs)};
}

// N = 1 with 1x1 kernels selects exactly what weight pruning selects; N = n
// selects whole input-channel rows, which is filter pruning of the
// input/output-transposed tensor.
Outcome degeneration() {
  std::mt19937_64 rng(102);
  const std::vector<double> rates{0.1, 0.25, 0.5, 0.75, 0.9};
  int weight_mismatch = 0;
  int filter_mismatch = 0;
  for (int i = 0; i < 50; ++i) {
    const WeightTensor w = random_tensor({pick(rng, 1, 48), pick(rng, 1, 48), 1, 1}, rng);
    const double p = pick_from(rng, rates);
    const BlockMask mask = select_mask_1xn(block_l1_scores(KernelMatrix(w), 1), 1, p);
    if (kept(mask.bits()) != kept(select_mask_weight(transpose_io(w), p))) ++weight_mismatch;
  }
  for (int i = 0; i < 50; ++i) {
    const std::size_t k = i % 2 ? 3 : 1;
    const std::size_t n = pick(rng, 1, 48);
    const WeightTensor w = random_tensor({n, pick(rng, 1, 48), k, k}, rng);
    const double p = pick_from(rng, rates);
    const BlockMask mask = select_mask_1xn(block_l1_scores(KernelMatrix(w), n), n, p);
    if (kept(mask.bits()) != kept(select_mask_filter(transpose_io(w), p))) ++filter_mismatch;
  }
  return {weight_mismatch == 0 && filter_mismatch == 0,
          format("N=1: %d/50 mismatches, N=n: %d/50 mismatches (exact set equality)",
                 weight_mismatch, filter_mismatch)};
}

// Mask cardinality equals round-half-up((1-p) K) for every pattern.
Outcome sparsity_exactness() {
  std::mt19937_64 rng(103);
  int checks = 0;
  int failures = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t width = pick_from(rng, std::vector<std::size_t>{1, 2, 4, 8});
    const std::size_t k = t % 2 ? 3 : 1;
    const WeightTensor w = random_tensor({width * pick(rng, 1, 12), pick(rng, 1, 40), k, k}, rng);
    for (std::size_t permille = 0; permille <= 1000; permille += 125) {
      const double p = permille / 1000.0;
      const std::size_t want_weight = testing::keep_count_permille(permille, w.size());
      const std::size_t want_filter = testing::keep_count_permille(permille, w.n());
      const std::size_t want_block = testing::keep_count_permille(permille, w.m() * w.n() / width);
      failures += kept(select_mask_weight(w, p)).size() != want_weight;
      failures += kept(select_mask_filter(w, p)).size() != want_filter;
      const BlockMask mask = select_mask_1xn(block_l1_scores(KernelMatrix(w), width), width, p);
      failures += kept(mask.bits()).size() != want_block;
      checks += 3;
    }
  }
  return {failures == 0, format("%d of %d mask counts off (9-point p grid, 3 patterns)", failures,
                                checks)};
}

// Rearranging the first layer of a two-layer chain leaves the chain's output
// unchanged up to float reassociation.
Outcome rearrangement_preservation() {
  std::mt19937_64 rng(104);
  double worst = 0.0;
  int failures = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t k = i % 2 ? 3 : 1;
    const std::size_t in = pick(rng, 4, 32);
    const std::size_t mid = pick(rng, 4, 48);
    const std::vector<TensorShape> shapes{{mid, in, k, k}, {pick(rng, 4, 32), mid, k, k}};
    const ModelGraph model = random_model(shapes, 1000 + i, {.with_bias = true});
    const RearrangeResult moved = rearrange_model(model);
    if (moved.report.rearranged_count() != 1) ++failures;
    const Activation x = k == 1 ? random_activation({32, 1, 1, in}, rng)
                                : random_activation({32, 5, 5, in}, rng);
    const Activation before = model_forward(x, model, Executor::kDense);
    const Activation after = model_forward(x, moved.model, Executor::kDense);
    const double err = max_relative_error(after.data(), before.data());
    worst = std::max(worst, err);
    if (err > 1e-5) ++failures;
  }
  return {failures == 0,
          format("100 chains x 32 activations, max rel err %.3g, tol 1e-5", worst)};
}

// Sorting filters by l1 before 1xN selection keeps at least as much l1 mass on
// average.
Outcome retained_magnitude() {
  std::mt19937_64 rng(105);
  const std::vector<std::size_t> dims{8, 16, 32};
  const std::vector<std::size_t> widths{2, 4, 8};
  double with = 0.0;
  double without = 0.0;
  int improved = 0;
  constexpr int kLayers = 1000;
  for (int i = 0; i < kLayers; ++i) {
    const WeightTensor w = random_tensor({pick_from(rng, dims), pick_from(rng, dims), 3, 3}, rng);
    const std::size_t width = pick_from(rng, widths);
    const double plain = retained_l1_1xn(w, width, 0.5, false);
    const double sorted = retained_l1_1xn(w, width, 0.5, true);
    without += plain;
    with += sorted;
    improved += sorted > plain;
  }
  with /= kLayers;
  without /= kLayers;
  return {with >= without,
          format("mean retained l1 %.4f with vs %.4f without rearrangement (%+.3f%%), "
                 "%d/%d layers improved",
                 with, without, 100.0 * (with - without) / without, improved, kLayers)};
}

// Encoding then decoding reproduces the masked tensor bit for bit.
Outcome bsr_round_trip() {
  std::mt19937_64 rng(106);
  int failures = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t width = pick_from(rng, std::vector<std::size_t>{1, 2, 4, 8, 16});
    const std::size_t k = i % 3 == 0 ? 3 : 1;
    const WeightTensor w = random_tensor({width * pick(rng, 1, 8), pick(rng, 1, 32), k, k}, rng);
    const double p = i == 0 ? 1.0 : i == 1 ? 0.0 : std::uniform_real_distribution<>(0, 1)(rng);
    const PruneResult r = prune_tensor(w, PatternKind::kBlock1xN, width, p);
    const WeightTensor back = bsr_decode(bsr_encode(r.pruned, *r.block_mask));
    const bool same = back.shape() == r.pruned.shape() &&
                      std::equal(back.data().begin(), back.data().end(), r.pruned.data().begin(),
                                 [](float a, float b) {
                                   return std::bit_cast<std::uint32_t>(a) ==
                                          std::bit_cast<std::uint32_t>(b);
                                 });
    failures += !same;
  }
  return {failures == 0, format("%d/100 round trips differ (zero and dense masks included)",
                                failures)};
}

Outcome index_storage() {
  std::mt19937_64 rng(107);
  const WeightTensor w = random_tensor({128, 128, 1, 1}, rng);
  const PruneResult r = prune_tensor(w, PatternKind::kBlock1xN, 4, 0.5);
  const StorageReport rep = storage_report(bsr_encode(r.pruned, *r.block_mask));
  return {rep.index_ratio() >= 2.0,
          format("csr %zu / bsr %zu indices = %.3f (need >= 2)", rep.csr_index_count,
                 rep.bsr_index_count, rep.index_ratio())};
}

Outcome latency_ordering() {
  cli::BenchGrid grid;
  grid.shapes = {cli::BenchShape::parse("1024x1024x1024")};
  grid.patterns = {PatternKind::kBlock1xN};
  grid.block_widths = {4};
  grid.rates = {0.5, 0.75, 0.875, 0.9375};
  grid.executors = {"dense", "csr", "bsr"};
  grid.warmup = 1;
  grid.iters = 5;
  grid.threads = 1;
  const auto rows = cli::run_bench_grid(grid);
  std::map<std::pair<double, std::string>, double> median;
  for (const auto& r : rows) median[{r.config.rate, r.config.executor}] = r.stats.median_ns;
  const double bsr = median[{0.875, "bsr"}];
  const double dense = median[{0.875, "dense"}];
  const double csr = median[{0.875, "csr"}];
  bool monotone = true;
  std::string curve;
  for (std::size_t i = 0; i < grid.rates.size(); ++i) {
    const double t = median[{grid.rates[i], "bsr"}];
    curve += format("%s%.1f", i ? " " : "", t / 1e6);
    if (i > 0 && t > 1.10 * median[{grid.rates[i - 1], "bsr"}]) monotone = false;
  }
  return {bsr < dense && bsr < csr && monotone,
          format("p=0.875: bsr %.1f ms, dense %.1f ms, csr %.1f ms; bsr over p {0.5..0.9375}: "
                 "[%s] ms (non-increasing within 10%%: %s)",
                 bsr / 1e6, dense / 1e6, csr / 1e6, curve.c_str(), monotone ? "yes" : "no")};
}

Outcome parallel_determinism() {
  std::mt19937_64 rng(109);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::vector<unsigned> counts{1, 2, hw, 8};
  int failures = 0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t width = pick_from(rng, std::vector<std::size_t>{2, 4, 8, 16});
    const std::size_t k = i % 2 ? 3 : 1;
    const WeightTensor w = random_tensor({width * pick(rng, 1, 8), pick(rng, 8, 64), k, k}, rng);
    const PruneResult r = prune_tensor(w, PatternKind::kBlock1xN, width, 0.5);
    const BsrLayer layer = bsr_encode(r.pruned, *r.block_mask);
    const Activation x = k == 1 ? random_activation({pick(rng, 1, 67), 1, 1, w.m()}, rng)
                                : random_activation({2, pick(rng, 3, 11), pick(rng, 3, 11), w.m()}, rng);
    const ConvParams conv{1, k / 2};
    const Activation base = bsr_forward(x, layer, conv, {1});
    for (unsigned t : counts) {
      const Activation y = bsr_forward(x, layer, conv, {t});
      const bool same = std::equal(y.data().begin(), y.data().end(), base.data().begin(),
                                   [](float a, float b) {
                                     return std::bit_cast<std::uint32_t>(a) ==
                                            std::bit_cast<std::uint32_t>(b);
                                   });
      failures += !same;
    }
  }
  return {failures == 0, format("20 configs x threads {1, 2, %u (max), 8}: %d differ bitwise", hw,
                                failures)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"oracle_equivalence", oracle_equivalence},
      {"degeneration_identities", degeneration},
      {"sparsity_exactness", sparsity_exactness},
      {"rearrangement_function_preservation", rearrangement_preservation},
      {"retained_magnitude", retained_magnitude},
      {"bsr_round_trip", bsr_round_trip},
      {"index_storage", index_storage},
      {"latency_ordering", latency_ordering},
      {"parallel_determinism", parallel_determinism},
  };
  std::set<std::size_t> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoul(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && !only.contains(i + 1)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
